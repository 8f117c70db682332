#include <doctest.h>

#include <algorithm>
#include <array>
#include <map>
#include <sstream>

#include "attentrack/error.hpp"
#include "attentrack/stats.hpp"
#include "attentrack/synth.hpp"

using namespace attentrack;

namespace {

SynthConfig small(int users, int per_user, std::uint64_t seed = 7) {
    auto c = SynthConfig::planted_default();
    c.n_users = users;
    c.records_min = c.records_max = per_user;
    c.seed = seed;
    return c;
}

std::string dump(const Dataset& d) {
    std::ostringstream out;
    write_records(out, d.records, DataFormat::jsonl);
    write_profiles(out, d.profiles);
    return out.str();
}

}  // namespace

TEST_CASE("planted default validates and round-trips through json") {
    const auto c = SynthConfig::planted_default();
    CHECK_NOTHROW(c.validate());
    const auto back = SynthConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
}

TEST_CASE("config errors") {
    auto c = SynthConfig::planted_default();
    c.activity[0] += 0.1;
    CHECK_THROWS_AS(c.validate(), UsageError);
    c = SynthConfig::planted_default();
    c.attention_given_activity.pop_back();
    CHECK_THROWS_AS(c.validate(), UsageError);
    c = SynthConfig::planted_default();
    c.response_time.group_var = -1.0;
    CHECK_THROWS_AS(c.validate(), UsageError);
    c = SynthConfig::planted_default();
    c.records_min = 10;
    c.records_max = 5;
    CHECK_THROWS_AS(c.validate(), UsageError);
    c = SynthConfig::planted_default();
    c.n_users = 0;
    CHECK_THROWS_AS(c.validate(), UsageError);
    CHECK_THROWS_AS(SynthConfig::from_json({{"bogus", 1}}), UsageError);
    CHECK_THROWS_AS(SynthConfig::from_json({{"n_users", "ten"}}), UsageError);
    CHECK_THROWS_AS(SynthConfig::load("/nonexistent/synth.json"), UsageError);
}

TEST_CASE("partial json keeps defaults") {
    const auto c = SynthConfig::from_json({{"n_users", 3}, {"records_per_user", 50}});
    CHECK(c.n_users == 3);
    CHECK(c.records_min == 50);
    CHECK(c.records_max == 50);
    CHECK(c.activity == SynthConfig::planted_default().activity);
}

TEST_CASE("generation is deterministic and valid") {
    const auto a = generate(small(4, 120));
    const auto b = generate(small(4, 120));
    CHECK(a.records.size() == 480);
    CHECK(a.profiles.size() == 4);
    CHECK(dump(a) == dump(b));
    CHECK_NOTHROW(validate_dataset(a));
    CHECK(dump(a) != dump(generate(small(4, 120, 8))));
}

TEST_CASE("records per user stay in range") {
    auto c = small(6, 10);
    c.records_max = 40;
    const auto d = generate(c);
    std::map<std::string, int> counts;
    for (const auto& r : d.records) ++counts[r.user_id];
    CHECK(counts.size() == 6);
    for (const auto& [_, n] : counts) {
        CHECK(n >= 10);
        CHECK(n <= 40);
    }
}

TEST_CASE("timestamps are increasing per user and time fields agree") {
    const auto d = generate(small(3, 200));
    std::map<std::string, std::int64_t> last;
    for (const auto& r : d.records) {
        CHECK(r.received_at.epoch_s < r.clicked_at.epoch_s + 1);
        CHECK(r.clicked_at.epoch_s - r.received_at.epoch_s == r.response_time_s);
        if (last.count(r.user_id)) CHECK(r.received_at.epoch_s > last[r.user_id]);
        last[r.user_id] = r.clicked_at.epoch_s;
        const auto tf = derive_time_fields(r.clicked_at);
        CHECK(tf.time_of_day == r.time_of_day);
        CHECK(tf.day_of_week == r.day_of_week);
    }
}

TEST_CASE("degenerate attention distribution") {
    auto c = small(2, 100);
    for (auto& row : c.attention_given_activity) row = {0, 0, 1, 0, 0};
    const auto d = generate(c);
    for (const auto& r : d.records) CHECK(r.attention == 3);
}

TEST_CASE("zero variances give the exact quadratic") {
    auto c = small(3, 100);
    c.response_time = {{5.0, 2.0, 1.0}, 0.0, 0.0, 0.0};
    const auto d = generate(c);
    for (const auto& r : d.records) {
        const double a = r.attention;
        CHECK(r.response_time_s == static_cast<std::int64_t>(5.0 + 2.0 * a + a * a));
    }
}

TEST_CASE("response time floor") {
    auto c = small(2, 200);
    c.response_time = {{-50.0, 0.0, 0.0}, 0.0, 100.0, 3.0};
    for (const auto& r : generate(c).records) CHECK(r.response_time_s >= 3);
}

TEST_CASE("empirical joint matches the configured law") {
    const auto c = small(10, 10000, 11);
    const auto d = generate(c);
    REQUIRE(d.records.size() == 100000);
    std::array<std::array<double, 5>, 9> joint{};
    std::array<std::array<double, 5>, 5> behavior{};
    std::array<double, 5> attention{};
    for (const auto& r : d.records) {
        joint[static_cast<std::size_t>(r.activity)][static_cast<std::size_t>(r.attention - 1)] += 1.0;
        behavior[static_cast<std::size_t>(r.attention - 1)]
                [static_cast<std::size_t>(coarsen_behavior(r.response_behavior))] += 1.0;
        attention[static_cast<std::size_t>(r.attention - 1)] += 1.0;
    }
    const double n = static_cast<double>(d.records.size());
    double tv = 0.0;
    for (std::size_t a = 0; a < 9; ++a)
        for (std::size_t l = 0; l < 5; ++l)
            tv += std::abs(joint[a][l] / n - c.activity[a] * c.attention_given_activity[a][l]);
    CHECK(tv / 2.0 < 0.01);
    for (std::size_t l = 0; l < 5; ++l) {
        double tvb = 0.0;
        for (std::size_t b = 0; b < 5; ++b)
            tvb += std::abs(behavior[l][b] / attention[l] - c.behavior_given_attention[l][b]);
        CHECK(tvb / 2.0 < 0.02);
    }
}

TEST_CASE("lmm recovers the planted response-time law") {
    auto c = small(35, 250, 3);
    c.response_time.beta[0] += 300.0;
    const auto d = generate(c);
    const auto fit = fit_lmm(d);
    const auto& law = c.response_time;
    for (std::size_t k = 0; k < 3; ++k) {
        const auto& f = fit.fixed[k];
        CHECK(f.estimate > law.beta[k] - 4.0 * f.std_error);
        CHECK(f.estimate < law.beta[k] + 4.0 * f.std_error);
    }
    CHECK(fit.residual_var == doctest::Approx(law.residual_var).epsilon(0.1));
    CHECK(fit.group_var == doctest::Approx(law.group_var).epsilon(0.6));
}

TEST_CASE("shuffle permutes attention only") {
    const auto d = generate(small(3, 150));
    const auto s = shuffle_labels(d, 99);
    REQUIRE(s.records.size() == d.records.size());
    std::vector<int> x, y;
    bool moved = false;
    for (std::size_t i = 0; i < d.records.size(); ++i) {
        x.push_back(d.records[i].attention);
        y.push_back(s.records[i].attention);
        moved = moved || x.back() != y.back();
        auto r = s.records[i];
        r.attention = d.records[i].attention;
        CHECK(r.response_time_s == d.records[i].response_time_s);
        CHECK(r.activity == d.records[i].activity);
    }
    CHECK(moved);
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    CHECK(x == y);
    CHECK(dump(shuffle_labels(d, 99)) == dump(s));
}

TEST_CASE("shuffle of one record is the identity") {
    auto d = generate(small(1, 1));
    CHECK(dump(shuffle_labels(d, 5)) == dump(d));
}

TEST_CASE("uniform attention given sitting over 100k records") {
    auto c = small(10, 10000, 21);
    c.attention_given_activity[0] = {0.2, 0.2, 0.2, 0.2, 0.2};
    const auto d = generate(c);
    std::array<double, 5> counts{};
    double sitting = 0.0;
    for (const auto& r : d.records) {
        if (r.activity != Activity::sitting) continue;
        counts[static_cast<std::size_t>(r.attention - 1)] += 1.0;
        sitting += 1.0;
    }
    double tv = 0.0;
    for (double k : counts) tv += std::abs(k / sitting - 0.2);
    CHECK(tv / 2.0 < 0.01);
}

TEST_CASE("empty support is rejected") {
    auto c = small(2, 10);
    c.activity.assign(9, 0.0);
    CHECK_THROWS_AS(generate(c), UsageError);
}
