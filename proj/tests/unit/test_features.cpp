#include <cmath>
#include <cstring>
#include <numeric>
#include <set>

#include "doctest.h"
#include "records.hpp"

#include "attentrack/error.hpp"
#include "attentrack/features.hpp"

using namespace attentrack;
using fixture::kMondayMidnight;

namespace {

const std::vector<SchemeName> kSchemes = {SchemeName::CONTEXT_ONLY, SchemeName::DISTRACTION_ONLY, SchemeName::FULL,
                                          SchemeName::FULL_FINE_RESPONSE, SchemeName::FULL_WITH_FACTORS};

std::size_t column(const EncodingScheme& s, const std::string& name) {
    const auto& cols = s.column_names();
    const auto it = std::find(cols.begin(), cols.end(), name);
    REQUIRE(it != cols.end());
    return static_cast<std::size_t>(it - cols.begin());
}

double block_sum(const EncodingScheme& s, const std::vector<double>& v, const std::string& block) {
    std::size_t offset = 0;
    for (const auto& d : s.descriptors()) {
        if (d.name == block)
            return std::accumulate(v.begin() + static_cast<std::ptrdiff_t>(offset),
                                   v.begin() + static_cast<std::ptrdiff_t>(offset + d.cardinality), 0.0);
        offset += d.cardinality;
    }
    FAIL("no block " << block);
    return 0.0;
}

}  // namespace

TEST_CASE("scheme dimensions") {
    CHECK(EncodingScheme(SchemeName::CONTEXT_ONLY).dimension() == 46);
    CHECK(EncodingScheme(SchemeName::DISTRACTION_ONLY).dimension() == 28);
    CHECK(EncodingScheme(SchemeName::FULL).dimension() == 74);
    CHECK(EncodingScheme(SchemeName::FULL_FINE_RESPONSE).dimension() == 75);
    CHECK(EncodingScheme(SchemeName::FULL_WITH_FACTORS).dimension() == 90);
    for (auto name : kSchemes) {
        const EncodingScheme s(name);
        std::size_t total = 0;
        for (const auto& d : s.descriptors()) total += d.cardinality;
        CHECK(total == s.dimension());
        CHECK(s.column_names().size() == s.dimension());
    }
}

TEST_CASE("FULL is the concatenation of context and distraction") {
    const EncodingScheme c(SchemeName::CONTEXT_ONLY), d(SchemeName::DISTRACTION_ONLY), f(SchemeName::FULL);
    auto r = fixture::record("u", kMondayMidnight + 9 * 3600, 4, 12);
    r.accel = Vec3{3, 4, 0};
    auto joined = c.encode(r);
    const auto dv = d.encode(r);
    joined.insert(joined.end(), dv.begin(), dv.end());
    CHECK(joined == f.encode(r));
}

TEST_CASE("one-hot slots") {
    const EncodingScheme s(SchemeName::FULL);
    auto r = fixture::record("u", kMondayMidnight + 13 * 3600, 3, 0);
    const auto v = s.encode(r);
    CHECK(v[column(s, "activity=sitting")] == 1.0);
    CHECK(block_sum(s, v, "activity") == 1.0);
    CHECK(v[column(s, "log1p_response_time")] == 0.0);
    CHECK(v[column(s, "time_of_day=afternoon")] == 1.0);
    CHECK(v[column(s, "foreground_category=home_screen")] == 1.0);
    CHECK(v[column(s, "accel_magnitude")] == 0.0);

    r.response_time_s = 99;
    r.accel = Vec3{3, 4, 0};
    r.response_behavior = ResponseBehavior::didnt_notice;
    const auto w = s.encode(r);
    CHECK(w[column(s, "log1p_response_time")] == doctest::Approx(std::log(100.0)));
    CHECK(w[column(s, "accel_magnitude")] == doctest::Approx(5.0));
    CHECK(w[column(s, "coarse_behavior=no_response")] == 1.0);
    const EncodingScheme fine(SchemeName::FULL_FINE_RESPONSE);
    CHECK(fine.encode(r)[column(fine, "response_behavior=didnt_notice")] == 1.0);
}

TEST_CASE("one-hot groups sum to one for every enum value") {
    for (auto name : kSchemes) {
        const EncodingScheme s(name);
        for (std::size_t a = 0; a < 9; ++a) {
            auto r = fixture::record("u", kMondayMidnight + static_cast<std::int64_t>(a) * 7777, 1 + a % 5);
            r.activity = static_cast<Activity>(a);
            r.notif_category = static_cast<AppCategory>(a * 2);
            r.response_behavior = static_cast<ResponseBehavior>(a % 6);
            const auto v = s.encode(r);
            for (const auto& d : s.descriptors())
                if (d.kind == FeatureDescriptor::Kind::one_hot) CHECK(block_sum(s, v, d.name) == 1.0);
        }
    }
}

TEST_CASE("factor multi-hot counts distinct factors") {
    const EncodingScheme s(SchemeName::FULL_WITH_FACTORS);
    auto r = fixture::record("u", kMondayMidnight, 2);
    r.codes = {"level_of_busyness.busy", "entertainment.watching_media"};
    auto v = s.encode(r);
    // oracle: count distinct factor parents via the taxonomy
    const auto& tax = CodeTaxonomy::default_taxonomy();
    std::set<std::size_t> factors;
    for (const auto& c : r.codes) factors.insert(tax.factor_of_code(*tax.code_index(c)));
    CHECK(block_sum(s, v, "factors") == static_cast<double>(factors.size()));
    CHECK(block_sum(s, v, "factors") == 2.0);
    CHECK(v[column(s, "factor=level_of_busyness")] == 1.0);

    r.codes = {"level_of_busyness.busy", "level_of_busyness.free"};
    CHECK(block_sum(s, s.encode(r), "factors") == 1.0);
    r.codes.clear();
    CHECK(block_sum(s, s.encode(r), "factors") == 0.0);
}

TEST_CASE("encoding is pure") {
    const EncodingScheme s(SchemeName::FULL_WITH_FACTORS);
    auto r = fixture::record("u", kMondayMidnight + 77, 5, 3);
    r.gyro = Vec3{0.1, 0.2, 0.3};
    r.codes = {"sleep_rest.resting"};
    const auto copy = r;
    const auto a = s.encode(r), b = s.encode(copy);
    REQUIRE(a.size() == b.size());
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("ablation hooks zero their columns") {
    EncodingOptions o;
    o.use_sensors = false;
    o.use_response_time = false;
    const EncodingScheme s(SchemeName::FULL, CodeTaxonomy::default_taxonomy(), o);
    auto r = fixture::record("u", kMondayMidnight, 5, 40);
    r.accel = Vec3{1, 1, 1};
    const auto v = s.encode(r);
    CHECK(v.size() == 74);
    CHECK(v[column(s, "accel_magnitude")] == 0.0);
    CHECK(v[column(s, "log1p_response_time")] == 0.0);
}

TEST_CASE("labelers") {
    const Labeler one(LabelerName::ATTENTRACK_I), two(LabelerName::ATTENTRACK_II), three(LabelerName::ATTENTRACK_III);
    CHECK(one.class_names()[static_cast<std::size_t>(one.label(3))] == "more_focused");
    CHECK(one.class_names()[static_cast<std::size_t>(one.label(2))] == "less_focused");
    CHECK(two.class_names()[static_cast<std::size_t>(two.label(1))] == "completely_unfocused");
    CHECK(two.class_names()[static_cast<std::size_t>(two.label(2))] == "somewhat_focused");
    CHECK(three.class_names()[static_cast<std::size_t>(three.label(2))] == "medium");
    CHECK(three.label(1) == 0);
    CHECK(three.label(5) == 2);
    for (const auto* l : {&one, &two, &three}) {
        CHECK_THROWS_AS(l->label(0), UsageError);
        CHECK_THROWS_AS(l->label(6), UsageError);
        int prev = -1;
        std::set<int> seen;
        for (int a = 1; a <= 5; ++a) {
            const int c = l->label(a);
            CHECK(c >= prev);
            prev = c;
            seen.insert(c);
        }
        CHECK(seen.size() == l->class_count());
    }
}

TEST_CASE("scheme and labeler names") {
    CHECK(parse_scheme("FULL_WITH_FACTORS") == SchemeName::FULL_WITH_FACTORS);
    CHECK(parse_labeler("ATTENTRACK_II") == LabelerName::ATTENTRACK_II);
    try {
        parse_scheme("FULLISH");
        FAIL("expected UsageError");
    } catch (const UsageError& e) {
        CHECK(std::string(e.what()).find("DISTRACTION_ONLY") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_labeler("attentrack_i"), UsageError);
    for (auto s : kSchemes) CHECK(parse_scheme(to_string(s)) == s);
}

TEST_CASE("build_matrix") {
    Dataset d;
    CHECK_THROWS(build_matrix(d, EncodingScheme(SchemeName::FULL), Labeler(LabelerName::ATTENTRACK_I)));
    d.records = {fixture::record("a", kMondayMidnight, 1)};
    auto m = build_matrix(d, EncodingScheme(SchemeName::FULL), Labeler(LabelerName::ATTENTRACK_I));
    CHECK(m.n_rows == 1);
    CHECK(m.n_cols == 74);
    CHECK(m.rows.size() == 74);
    d.records.push_back(fixture::record("b", kMondayMidnight + 60, 4));
    d.records.push_back(fixture::record("a", kMondayMidnight + 120, 5));
    m = build_matrix(d, EncodingScheme(SchemeName::FULL), Labeler(LabelerName::ATTENTRACK_I));
    CHECK(std::set<std::string>(m.user_ids.begin(), m.user_ids.end()).size() == 2);
    CHECK(m.labels == std::vector<int>{0, 1, 1});
    CHECK(m.record_index == std::vector<std::size_t>{0, 1, 2});
    const std::vector<std::size_t> pick = {2, 0};
    const auto sub = m.subset(pick);
    CHECK(sub.n_rows == 2);
    CHECK(sub.user_ids == std::vector<std::string>{"a", "a"});
    CHECK(std::equal(sub.row(0).begin(), sub.row(0).end(), m.row(2).begin()));
}

TEST_CASE("default taxonomy shape") {
    const auto& t = CodeTaxonomy::default_taxonomy();
    CHECK(t.categories().size() == 4);
    CHECK(t.factors().size() == 16);
    CHECK(t.codes().size() == 46);
    for (const auto& level : {t.categories(), t.factors(), t.codes()}) {
        std::set<std::string> ids;
        for (const auto& n : level) CHECK(ids.insert(n.id).second);
    }
    for (std::size_t c = 0; c < t.codes().size(); ++c) CHECK(t.factor_of_code(c) < 16);
    for (std::size_t f = 0; f < 16; ++f) CHECK(t.category_of_factor(f) < 4);
    CHECK(CodeTaxonomy::from_json(t.to_json()) == t);
    auto j = t.to_json();
    j["categories"][0]["factors"][0]["codes"][1]["id"] = j["categories"][0]["factors"][0]["codes"][0]["id"];
    CHECK_THROWS(CodeTaxonomy::from_json(j));
}
