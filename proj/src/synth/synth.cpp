#include "attentrack/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "attentrack/error.hpp"
#include "attentrack/parallel.hpp"
#include "attentrack/rng.hpp"

namespace attentrack {
namespace {

std::vector<double> uniform(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

void check_distribution(const std::vector<double>& p, std::size_t size, const std::string& what) {
    if (p.size() != size)
        throw UsageError(what + ": expected " + std::to_string(size) + " probabilities, got " + std::to_string(p.size()));
    double s = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw UsageError(what + ": probabilities must be finite and >= 0");
        s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw UsageError(what + ": probabilities sum to " + std::to_string(s) + ", not 1");
}

std::size_t draw(Rng& rng, const std::vector<double>& p) {
    const double u = uniform_unit(rng);
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        last = i;
        acc += p[i];
        if (u < acc) return i;
    }
    return last;  // rounding in the cumulative sum
}

// Factor pairs feeding the motivation-code mixture, per coarse behavior.
constexpr std::array<std::array<std::string_view, 2>, 5> kMotivationFactors{{
    {"important", "requires_action"},              // click_to_view
    {"not_important", "level_of_busyness"},        // swipe_clear
    {"cognitive_engagement", "level_of_busyness"},  // swipe_cancel_popup
    {"level_of_busyness", "entertainment"},        // no_response
    {"personal_others", "not_important"},          // adjust_settings
}};

// Activity-dependent motion intensity for the synthetic sensor vectors.
constexpr std::array<double, 9> kMotion{0.05, 0.03, 0.1, 1.2, 0.3, 1.5, 0.6, 1.8, 3.0};

constexpr std::array<std::string_view, 4> kBrands{"acme", "globex", "initech", "umbrella"};
constexpr std::array<std::string_view, 3> kEducation{"bachelor", "master", "phd"};

}  // namespace

SynthConfig SynthConfig::planted_default() {
    SynthConfig c;
    c.activity = {0.45, 0.10, 0.10, 0.15, 0.02, 0.05, 0.08, 0.03, 0.02};
    c.attention_given_activity = {
        {0.05, 0.10, 0.25, 0.30, 0.30},  // sitting
        {0.10, 0.15, 0.30, 0.25, 0.20},  // lying
        {0.15, 0.25, 0.30, 0.20, 0.10},  // standing_still
        {0.40, 0.30, 0.20, 0.07, 0.03},  // walking
        {0.30, 0.30, 0.25, 0.10, 0.05},  // taking_elevator
        {0.35, 0.30, 0.20, 0.10, 0.05},  // cycling_driving
        {0.30, 0.30, 0.20, 0.15, 0.05},  // taking_transportation
        {0.40, 0.30, 0.20, 0.07, 0.03},  // up_down_stairs
        {0.50, 0.30, 0.15, 0.04, 0.01},  // running
    };
    c.behavior_given_attention = {
        {0.10, 0.15, 0.10, 0.60, 0.05},
        {0.20, 0.20, 0.15, 0.40, 0.05},
        {0.40, 0.25, 0.15, 0.15, 0.05},
        {0.55, 0.20, 0.10, 0.10, 0.05},
        {0.65, 0.15, 0.10, 0.05, 0.05},
    };
    c.notif_category = uniform(kNotifCategoryCount);
    c.foreground_category = uniform(kForegroundCategoryCount);
    return c;
}

void SynthConfig::validate() const {
    if (n_users < 1) throw UsageError("n_users must be >= 1");
    if (records_min < 1 || records_max < records_min)
        throw UsageError("records_per_user needs 1 <= min <= max");
    check_distribution(activity, 9, "activity");
    if (attention_given_activity.size() != 9) throw UsageError("attention_given_activity needs 9 rows");
    for (std::size_t a = 0; a < 9; ++a)
        check_distribution(attention_given_activity[a], 5,
                           "attention_given_activity[" + std::string(to_token(static_cast<Activity>(a))) + "]");
    if (behavior_given_attention.size() != 5) throw UsageError("behavior_given_attention needs 5 rows");
    for (std::size_t a = 0; a < 5; ++a)
        check_distribution(behavior_given_attention[a], 5, "behavior_given_attention[" + std::to_string(a + 1) + "]");
    check_distribution(notif_category, kNotifCategoryCount, "notif_category");
    check_distribution(foreground_category, kForegroundCategoryCount, "foreground_category");
    const auto& rt = response_time;
    for (double b : rt.beta)
        if (!std::isfinite(b)) throw UsageError("response_time.beta must be finite");
    if (!(rt.group_var >= 0.0) || !(rt.residual_var >= 0.0)) throw UsageError("response_time variances must be >= 0");
    if (!(rt.floor_s >= 0.0)) throw UsageError("response_time.floor must be >= 0");
    if (!(span_days > 0.0)) throw UsageError("span_days must be > 0");
    for (double p : {ignore_share, sensor_rate, motivation_rate})
        if (!(p >= 0.0 && p <= 1.0)) throw UsageError("shares and rates must lie in [0, 1]");
}

nlohmann::json SynthConfig::to_json() const {
    return {
        {"n_users", n_users},
        {"records_per_user", {{"min", records_min}, {"max", records_max}}},
        {"seed", seed},
        {"activity", activity},
        {"attention_given_activity", attention_given_activity},
        {"behavior_given_attention", behavior_given_attention},
        {"notif_category", notif_category},
        {"foreground_category", foreground_category},
        {"response_time",
         {{"beta", response_time.beta},
          {"group_var", response_time.group_var},
          {"residual_var", response_time.residual_var},
          {"floor", response_time.floor_s}}},
        {"start", format_timestamp(start)},
        {"span_days", span_days},
        {"ignore_share", ignore_share},
        {"sensor_rate", sensor_rate},
        {"motivation_rate", motivation_rate},
    };
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
    SynthConfig c = planted_default();
    try {
        if (!j.is_object()) throw UsageError("synth config must be a JSON object");
        static const std::vector<std::string> known = {
            "n_users",        "records_per_user", "seed",          "activity",     "attention_given_activity",
            "behavior_given_attention", "notif_category", "foreground_category", "response_time", "start",
            "span_days",      "ignore_share",     "sensor_rate",   "motivation_rate"};
        for (const auto& [k, _] : j.items())
            if (std::find(known.begin(), known.end(), k) == known.end())
                throw UsageError("unknown synth config key '" + k + "'");
        auto get = [&](const char* key, auto& out) {
            if (j.contains(key)) j.at(key).get_to(out);
        };
        get("n_users", c.n_users);
        if (j.contains("records_per_user")) {
            const auto& r = j.at("records_per_user");
            if (r.is_number_integer()) {
                c.records_min = c.records_max = r.get<int>();
            } else {
                r.at("min").get_to(c.records_min);
                r.at("max").get_to(c.records_max);
            }
        }
        get("seed", c.seed);
        get("activity", c.activity);
        get("attention_given_activity", c.attention_given_activity);
        get("behavior_given_attention", c.behavior_given_attention);
        get("notif_category", c.notif_category);
        get("foreground_category", c.foreground_category);
        if (j.contains("response_time")) {
            const auto& rt = j.at("response_time");
            if (rt.contains("beta")) rt.at("beta").get_to(c.response_time.beta);
            if (rt.contains("group_var")) rt.at("group_var").get_to(c.response_time.group_var);
            if (rt.contains("residual_var")) rt.at("residual_var").get_to(c.response_time.residual_var);
            if (rt.contains("floor")) rt.at("floor").get_to(c.response_time.floor_s);
        }
        if (j.contains("start")) c.start = parse_timestamp(j.at("start").get<std::string>());
        get("span_days", c.span_days);
        get("ignore_share", c.ignore_share);
        get("sensor_rate", c.sensor_rate);
        get("motivation_rate", c.motivation_rate);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("malformed synth config: ") + e.what());
    }
    c.validate();
    return c;
}

SynthConfig SynthConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open synth config '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("synth config '" + path + "' is not valid JSON: " + e.what());
    }
    return from_json(j);
}

Dataset generate(const SynthConfig& c, const CodeTaxonomy& taxonomy) {
    c.validate();
    // Codes available per coarse behavior: two factors, mixed 70/30.
    std::array<std::array<std::vector<std::size_t>, 2>, 5> code_pool;
    for (std::size_t b = 0; b < 5; ++b)
        for (std::size_t k = 0; k < 2; ++k)
            if (const auto f = taxonomy.factor_index(kMotivationFactors[b][k]))
                for (std::size_t code = 0; code < taxonomy.codes().size(); ++code)
                    if (taxonomy.factor_of_code(code) == *f) code_pool[b][k].push_back(code);

    const auto users = static_cast<std::size_t>(c.n_users);
    const int width = static_cast<int>(std::to_string(users - 1).size());
    std::vector<std::vector<EsmRecord>> per_user(users);
    std::vector<UserProfile> profiles(users);
    const double rt_sd = std::sqrt(c.response_time.residual_var);
    const double u_sd = std::sqrt(c.response_time.group_var);

    parallel_for(users, 1, [&](std::size_t u) {
        Rng rng(derive_seed(c.seed, u));
        std::string id = std::to_string(u);
        id = "P" + std::string(static_cast<std::size_t>(width) - id.size(), '0') + id;

        UserProfile& p = profiles[u];
        p.user_id = id;
        p.gender = static_cast<Gender>(uniform_index(rng, 2));
        p.age = 18 + static_cast<int>(uniform_index(rng, 18));
        p.occupation = static_cast<Occupation>(uniform_index(rng, 2));
        p.education = std::string(kEducation[uniform_index(rng, kEducation.size())]);
        p.phone_brand = std::string(kBrands[uniform_index(rng, kBrands.size())]);
        p.rounds = uniform_index(rng, 4) == 0 ? std::vector<int>{1, 2} : std::vector<int>{1};

        const double intercept = u_sd * standard_normal(rng);
        const auto n = static_cast<std::size_t>(c.records_min) +
                       uniform_index(rng, static_cast<std::uint64_t>(c.records_max - c.records_min + 1));
        const double mean_gap = c.span_days * 86400.0 / static_cast<double>(n);
        std::int64_t previous_click = c.start.epoch_s;
        auto& out = per_user[u];
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            EsmRecord r;
            r.user_id = id;
            r.round = p.rounds.size() == 2 && i >= n / 2 ? 2 : 1;
            r.activity = static_cast<Activity>(draw(rng, c.activity));
            const auto act = static_cast<std::size_t>(r.activity);
            r.attention = 1 + static_cast<int>(draw(rng, c.attention_given_activity[act]));
            const auto coarse = static_cast<CoarseBehavior>(
                draw(rng, c.behavior_given_attention[static_cast<std::size_t>(r.attention - 1)]));
            switch (coarse) {
                case CoarseBehavior::click_to_view: r.response_behavior = ResponseBehavior::click_to_view; break;
                case CoarseBehavior::swipe_clear: r.response_behavior = ResponseBehavior::swipe_clear; break;
                case CoarseBehavior::swipe_cancel_popup:
                    r.response_behavior = ResponseBehavior::swipe_cancel_popup;
                    break;
                case CoarseBehavior::no_response:
                    r.response_behavior = uniform_unit(rng) < c.ignore_share ? ResponseBehavior::ignore
                                                                             : ResponseBehavior::didnt_notice;
                    break;
                case CoarseBehavior::adjust_settings: r.response_behavior = ResponseBehavior::adjust_settings; break;
            }

            const double a = r.attention;
            const auto& b = c.response_time.beta;
            const double rt = b[0] + b[1] * a + b[2] * a * a + intercept + rt_sd * standard_normal(rng);
            r.response_time_s = static_cast<std::int64_t>(std::max(c.response_time.floor_s, std::round(rt)));

            const double gap = 60.0 + mean_gap * -std::log1p(-uniform_unit(rng));
            r.received_at = {previous_click + static_cast<std::int64_t>(std::round(gap)), c.start.utc_offset_s};
            r.clicked_at = {r.received_at.epoch_s + r.response_time_s, c.start.utc_offset_s};
            previous_click = r.clicked_at.epoch_s;
            const auto tf = derive_time_fields(r.clicked_at);
            r.time_of_day = tf.time_of_day;
            r.day_of_week = tf.day_of_week;
            r.weekday = tf.weekday;

            if (uniform_unit(rng) < c.sensor_rate) {
                const double m = kMotion[act];
                r.accel = Vec3{m * standard_normal(rng), m * standard_normal(rng), 9.81 + m * standard_normal(rng)};
                r.gyro = Vec3{0.2 * m * standard_normal(rng), 0.2 * m * standard_normal(rng),
                              0.2 * m * standard_normal(rng)};
            }

            r.foreground_category = static_cast<AppCategory>(draw(rng, c.foreground_category));
            r.foreground_app = r.foreground_category == AppCategory::home_screen
                                   ? std::string(kHomeScreenApp)
                                   : "app." + std::string(to_token(r.foreground_category));
            r.notif_category = static_cast<AppCategory>(draw(rng, c.notif_category));
            r.notif_app = "app." + std::string(to_token(r.notif_category)) + "." +
                          std::to_string(uniform_index(rng, 3));

            if (uniform_unit(rng) < c.motivation_rate) {
                const auto& pools = code_pool[static_cast<std::size_t>(coarse)];
                const auto& pool = uniform_unit(rng) < 0.7 || pools[1].empty() ? pools[0] : pools[1];
                if (!pool.empty()) {
                    const auto code = pool[uniform_index(rng, pool.size())];
                    r.codes = {taxonomy.codes()[code].id};
                    r.motivation_text = "synthetic: " + taxonomy.codes()[code].label;
                }
            }
            out.push_back(std::move(r));
        }
    });

    Dataset d;
    d.taxonomy = taxonomy;
    d.profiles = std::move(profiles);
    for (auto& rs : per_user)
        for (auto& r : rs) d.records.push_back(std::move(r));
    validate_dataset(d);
    return d;
}

Dataset shuffle_labels(const Dataset& d, std::uint64_t seed) {
    Dataset out = d;
    const std::size_t n = out.records.size();
    Rng rng(seed);
    std::vector<int> labels;
    labels.reserve(n);
    for (const auto& r : d.records) labels.push_back(r.attention);
    for (std::size_t i = n; i > 1; --i) std::swap(labels[i - 1], labels[uniform_index(rng, i)]);
    for (std::size_t i = 0; i < n; ++i) out.records[i].attention = labels[i];
    return out;
}

}  // namespace attentrack
