#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "doctest.h"
#include "records.hpp"

#include "attentrack/error.hpp"
#include "attentrack/eval.hpp"

using namespace attentrack;
using fixture::kMondayMidnight;

namespace {

EvalConfig small_config(LearnerKind kind) {
    EvalConfig c;
    c.model.kind = kind;
    c.model.forest.n_estimators = 15;
    c.model.gbm.n_estimators = 15;
    return c;
}

Dataset users_with_shares(const std::vector<std::pair<int, int>>& high_low) {
    Dataset d;
    int u = 0;
    for (auto [high, low] : high_low) {
        const std::string id = "u" + std::to_string(u++);
        d.profiles.push_back(fixture::profile(id));
        int i = 0;
        for (int k = 0; k < high; ++k) d.records.push_back(fixture::record(id, kMondayMidnight + 600 * i++, 4));
        for (int k = 0; k < low; ++k) d.records.push_back(fixture::record(id, kMondayMidnight + 600 * i++, 1));
    }
    return d;
}

std::string louo_csv(const LouoReport& r) {
    std::ostringstream s;
    write_louo_csv(s, r);
    write_louo_markdown(s, r);
    return s.str();
}

}  // namespace

TEST_CASE("louo with a majority predictor gives each user's majority share") {
    const auto d = users_with_shares({{8, 2}, {6, 4}, {7, 3}});
    const auto r = run_louo(d, small_config(LearnerKind::majority));
    REQUIRE(r.folds.size() == 3);
    const std::map<std::string, double> expected = {{"u0", 0.8}, {"u1", 0.6}, {"u2", 0.7}};
    for (const auto& f : r.folds) {
        CHECK(f.model.accuracy == doctest::Approx(expected.at(f.user_id)));
        CHECK(f.n_test == 10);
        CHECK(f.n_train == 20);
    }
    CHECK(r.model.mean.accuracy == doctest::Approx(0.7));
    CHECK(r.model.sd.accuracy == doctest::Approx(std::sqrt((0.01 + 0.01 + 0.0) / 3)));
}

TEST_CASE("two identical users give identical folds") {
    auto d = fixture::toy_dataset(1, 40, 3);
    const auto n = d.records.size();
    for (std::size_t i = 0; i < n; ++i) {
        auto r = d.records[i];
        r.user_id = "twin";
        d.records.push_back(r);
    }
    d.profiles.push_back(fixture::profile("twin"));
    for (auto kind : {LearnerKind::forest, LearnerKind::gbm}) {
        auto c = small_config(kind);
        const auto r = run_louo(d, c);
        REQUIRE(r.folds.size() == 2);
        CHECK(r.folds[0].model.accuracy == r.folds[1].model.accuracy);
        CHECK(r.folds[0].model.auc == r.folds[1].model.auc);
        CHECK(r.model.sd.accuracy == 0.0);
    }
}

TEST_CASE("louo needs two users") {
    const auto d = fixture::toy_dataset(1, 20, 1);
    CHECK_THROWS_AS(run_louo(d, small_config(LearnerKind::gbm)), UsageError);
}

TEST_CASE("louo weighted recall equals accuracy in every fold") {
    const auto d = fixture::toy_dataset(4, 50, 9);
    for (auto lab : {LabelerName::ATTENTRACK_I, LabelerName::ATTENTRACK_III}) {
        auto c = small_config(LearnerKind::forest);
        c.labeler = lab;
        for (const auto& f : run_louo(d, c).folds) CHECK(f.model.recall_weighted == f.model.accuracy);
    }
}

TEST_CASE("fold results do not depend on thread count") {
    const auto d = fixture::toy_dataset(5, 40, 21);
    for (auto kind : {LearnerKind::forest, LearnerKind::gbm}) {
        auto c = small_config(kind);
        const auto a = louo_csv(run_louo(d, c));
        c.threads = 4;
        const auto b = louo_csv(run_louo(d, c));
        CHECK(a == b);
    }
}

TEST_CASE("single-class training falls back to priors") {
    auto d = users_with_shares({{10, 0}, {12, 0}, {3, 3}});
    const auto r = run_louo(d, small_config(LearnerKind::gbm));
    const auto it = std::find_if(r.folds.begin(), r.folds.end(), [](auto& f) { return f.user_id == "u2"; });
    REQUIRE(it != r.folds.end());
    CHECK(it->fallback);
    CHECK(it->model.accuracy == 0.5);
}

TEST_CASE("personalization splits chronologically and skips small users") {
    auto d = fixture::toy_dataset(4, 30, 5);
    // Shuffle record order inside the file; the split must still be by time.
    std::reverse(d.records.begin(), d.records.end());
    for (int i = 0; i < 6; ++i) d.records.push_back(fixture::record("tiny", kMondayMidnight + i * 60, 1 + i % 5));
    d.profiles.push_back(fixture::profile("tiny"));
    const auto r = run_personalization(d, small_config(LearnerKind::forest));
    CHECK(r.folds.size() == 4);
    REQUIRE(r.notices.size() == 1);
    CHECK(r.notices[0].find("tiny") != std::string::npos);
    for (const auto& f : r.folds) {
        CHECK(f.last_train_time <= f.first_test_time);
        CHECK(f.n_personal_train == 21);
        CHECK(f.n_test == 9);
        CHECK(f.n_general_train == 96);
    }
}

TEST_CASE("incremental at fraction zero reproduces the cold-start fold") {
    const auto d = fixture::toy_dataset(4, 40, 13);
    for (auto kind : {LearnerKind::forest, LearnerKind::gbm}) {
        const auto c = small_config(kind);
        const auto inc = run_incremental(d, c, {0.0, 0.5, 1.0});
        REQUIRE(inc.points.size() == 12);
        CHECK(inc.curve.size() == 3);
        for (std::size_t u = 0; u < 4; ++u) {
            const auto& p0 = inc.points[u * 3];
            CHECK(p0.fraction == 0.0);
            CHECK(p0.n_own_train == 0);
            CHECK(p0.n_test == 8);
            CHECK(inc.points[u * 3 + 2].n_own_train == 32);
        }
        // A dataset where the held-out user keeps only their last 20% gives the cold-start fold.
        for (const auto& user : d.user_ids()) {
            Dataset only_test = d;
            std::vector<EsmRecord> mine, others;
            for (const auto& r : d.records) (r.user_id == user ? mine : others).push_back(r);
            std::stable_sort(mine.begin(), mine.end(),
                             [](auto& a, auto& b) { return a.clicked_at.epoch_s < b.clicked_at.epoch_s; });
            only_test.records = others;
            only_test.records.insert(only_test.records.end(), mine.begin() + 32, mine.end());
            const auto louo = run_louo(only_test, c);
            const auto f = std::find_if(louo.folds.begin(), louo.folds.end(), [&](auto& x) { return x.user_id == user; });
            const auto p = std::find_if(inc.points.begin(), inc.points.end(),
                                        [&](auto& x) { return x.user_id == user && x.fraction == 0.0; });
            CHECK(f->model == p->metrics);
        }
    }
    CHECK_THROWS_AS(run_incremental(d, small_config(LearnerKind::gbm), {1.5}), UsageError);
}

TEST_CASE("ablation runs the three schemes") {
    const auto d = fixture::toy_dataset(3, 30, 2);
    const auto r = run_ablation(d, small_config(LearnerKind::gbm));
    REQUIRE(r.runs.size() == 3);
    CHECK(r.runs[0].config.scheme == SchemeName::CONTEXT_ONLY);
    CHECK(r.runs[1].config.scheme == SchemeName::DISTRACTION_ONLY);
    CHECK(r.runs[2].config.scheme == SchemeName::FULL);
    std::ostringstream s;
    write_ablation_markdown(s, r);
    CHECK(s.str().find("DISTRACTION_ONLY") != std::string::npos);
}

TEST_CASE("group model") {
    const auto d = fixture::toy_dataset(6, 30, 4);
    const auto pred = parse_group("occupation=working");
    const auto r = run_group_model(d, pred, small_config(LearnerKind::gbm), "working");
    CHECK(r.folds.size() == 3);
    for (const auto& f : r.folds) {
        CHECK(f.n_group_train == 60);
        CHECK(f.n_general_train == 150);
    }
    CHECK_THROWS_AS(parse_group("occupation=retired"), UsageError);
    CHECK_THROWS_AS(parse_group("height=2"), UsageError);
    CHECK_THROWS_AS(parse_group("gender"), UsageError);
    CHECK_THROWS_AS(run_group_model(d, parse_group("phone_brand=none"), small_config(LearnerKind::gbm)), UsageError);
}

TEST_CASE("summary uses population SD and skips undefined AUCs") {
    MetricSet a, b, c;
    a.accuracy = 0.2;
    b.accuracy = 0.4;
    c.accuracy = 0.6;
    a.auc = 0.5;
    b.auc = 0.7;
    const std::vector<MetricSet> sets = {a, b, c};
    const auto s = summarize(sets);
    CHECK(s.mean.accuracy == doctest::Approx(0.4));
    CHECK(s.sd.accuracy == doctest::Approx(std::sqrt(0.08 / 3)));
    CHECK(s.auc_n == 2);
    CHECK(*s.mean.auc == doctest::Approx(0.6));
    CHECK(*s.sd.auc == doctest::Approx(0.1));
}

TEST_CASE("learner names") {
    CHECK(parse_learner("rf") == LearnerKind::forest);
    CHECK(parse_learner("gb") == LearnerKind::gbm);
    CHECK_THROWS_AS(parse_learner("svm"), UsageError);
}
