#include "attentrack/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "attentrack/error.hpp"
#include "attentrack/parallel.hpp"
#include "attentrack/rng.hpp"

namespace attentrack {

std::string_view to_string(LearnerKind k) {
    switch (k) {
        case LearnerKind::forest: return "rf";
        case LearnerKind::gbm: return "gb";
        case LearnerKind::majority: return "majority";
    }
    return "?";
}

LearnerKind parse_learner(std::string_view s) {
    if (s == "rf") return LearnerKind::forest;
    if (s == "gb") return LearnerKind::gbm;
    if (s == "majority") return LearnerKind::majority;
    throw UsageError("unknown model '" + std::string(s) + "' (valid: rf, gb, majority)");
}

Predictor Predictor::fit(const ModelSpec& spec, MatrixView x, std::span<const int> y,
                         const std::vector<std::string>& class_names, std::uint64_t seed,
                         std::span<const std::uint64_t> row_keys) {
    if (y.size() != x.rows) throw UsageError("X and y lengths differ");
    if (y.empty()) throw UsageError("empty training set");
    Predictor p;
    std::vector<double> counts(class_names.size(), 0.0);
    for (int c : y) {
        if (c < 0 || static_cast<std::size_t>(c) >= counts.size()) throw UsageError("label out of range");
        counts[static_cast<std::size_t>(c)] += 1.0;
    }
    const auto present = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; });
    if (spec.kind == LearnerKind::majority || present < 2) {
        p.fallback_ = spec.kind != LearnerKind::majority;
        p.prior_ = counts;
        for (double& v : p.prior_) v /= static_cast<double>(y.size());
        return p;
    }
    if (spec.kind == LearnerKind::forest) {
        ForestParams fp = spec.forest;
        fp.seed = seed;
        p.ensemble_ = fit_forest(x, y, class_names, fp, row_keys);
    } else {
        GbmParams gp = spec.gbm;
        gp.seed = seed;
        p.ensemble_ = fit_gbm(x, y, class_names, gp);
    }
    return p;
}

std::vector<double> Predictor::predict_proba(std::span<const double> x) const {
    return ensemble_ ? ensemble_->predict_proba(x) : prior_;
}

std::uint64_t fold_seed(std::uint64_t run_seed, std::string_view user_id) {
    return derive_seed(run_seed, stable_hash(user_id));
}

namespace {

constexpr std::uint64_t kBaselineStream = 0xba5e;
constexpr std::uint64_t kPersonalStream = 1;
constexpr std::uint64_t kGroupStream = 2;

double sq(double v) { return v * v; }

// Training/test rows are indices into one FeatureMatrix.
struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

struct Scored {
    MetricSet metrics;
    MetricSet baseline;
    bool fallback = false;
};

Scored train_and_score(const FeatureMatrix& fm, const Split& split, const ModelSpec& spec, std::uint64_t seed,
                       bool with_baseline = false) {
    if (split.train.empty() || split.test.empty()) throw UsageError("empty training or test split");
    std::vector<double> x;
    x.reserve(split.train.size() * fm.n_cols);
    std::vector<int> y;
    std::vector<std::uint64_t> keys;
    for (auto r : split.train) {
        const auto row = fm.row(r);
        x.insert(x.end(), row.begin(), row.end());
        y.push_back(fm.labels[r]);
        keys.push_back(fm.record_index[r]);
    }
    const auto model =
        Predictor::fit(spec, MatrixView(x, split.train.size(), fm.n_cols), y, fm.class_names, seed, keys);

    const std::size_t k = fm.class_names.size();
    std::vector<int> truth, pred;
    std::vector<double> score;
    for (auto r : split.test) {
        const auto p = model.predict_proba(fm.row(r));
        truth.push_back(fm.labels[r]);
        pred.push_back(static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
        score.insert(score.end(), p.begin(), p.end());
    }
    Scored s;
    s.fallback = model.is_fallback();
    s.metrics = compute_metrics(truth, pred, score, k);
    if (with_baseline) {
        const auto rnd = random_baseline(truth, k, derive_seed(seed, kBaselineStream));
        s.baseline = compute_metrics(truth, rnd.y_pred, rnd.y_score, k);
    }
    return s;
}

struct Prepared {
    FeatureMatrix fm;
    std::vector<std::string> users;                      // sorted
    std::map<std::string, std::vector<std::size_t>> rows;  // rows of each user, matrix order
};

Prepared prepare(const Dataset& d, const EvalConfig& c, SchemeName scheme) {
    Prepared p;
    p.fm = build_matrix(d, EncodingScheme(scheme, d.taxonomy, c.encoding), Labeler(c.labeler));
    for (std::size_t i = 0; i < p.fm.n_rows; ++i) p.rows[p.fm.user_ids[i]].push_back(i);
    for (const auto& [u, _] : p.rows) p.users.push_back(u);
    return p;
}

std::vector<std::size_t> rows_excluding(const Prepared& p, const std::string& user) {
    std::vector<std::size_t> out;
    out.reserve(p.fm.n_rows);
    for (std::size_t i = 0; i < p.fm.n_rows; ++i)
        if (p.fm.user_ids[i] != user) out.push_back(i);
    return out;
}

// The user's rows in click order (ties keep matrix order).
std::vector<std::size_t> chronological(const Dataset& d, const Prepared& p, const std::string& user) {
    auto rows = p.rows.at(user);
    std::stable_sort(rows.begin(), rows.end(), [&](auto a, auto b) {
        return d.records[p.fm.record_index[a]].clicked_at.epoch_s < d.records[p.fm.record_index[b]].clicked_at.epoch_s;
    });
    return rows;
}

std::int64_t clicked(const Dataset& d, const Prepared& p, std::size_t row) {
    return d.records[p.fm.record_index[row]].clicked_at.epoch_s;
}

template <typename T, typename Get>
std::vector<MetricSet> collect(const std::vector<T>& items, Get get) {
    std::vector<MetricSet> out;
    for (const auto& it : items) out.push_back(get(it));
    return out;
}

LouoReport louo_with(const Prepared& p, const EvalConfig& config) {
    if (p.users.size() < 2) throw UsageError("LOUO needs at least 2 users, found " + std::to_string(p.users.size()));
    LouoReport r;
    r.config = config;
    r.folds.resize(p.users.size());
    parallel_for(p.users.size(), config.threads, [&](std::size_t i) {
        const auto& user = p.users[i];
        Split s{rows_excluding(p, user), p.rows.at(user)};
        const auto scored = train_and_score(p.fm, s, config.model, fold_seed(config.seed, user), true);
        r.folds[i] = {user, s.train.size(), s.test.size(), scored.fallback, scored.metrics, scored.baseline};
    });
    r.model = summarize(collect(r.folds, [](const FoldResult& f) { return f.model; }));
    r.baseline = summarize(collect(r.folds, [](const FoldResult& f) { return f.baseline; }));
    return r;
}

}  // namespace

MetricSummary summarize(std::span<const MetricSet> sets) {
    MetricSummary s;
    s.folds = sets.size();
    if (sets.empty()) return s;
    const double n = static_cast<double>(sets.size());

    auto plain = [&](double MetricSet::*field) {
        double mean = 0.0;
        for (const auto& m : sets) mean += m.*field;
        mean /= n;
        double var = 0.0;
        for (const auto& m : sets) var += sq(m.*field - mean);
        s.mean.*field = mean;
        s.sd.*field = std::sqrt(var / n);
    };
    auto optional = [&](std::optional<double> MetricSet::*field) {
        double mean = 0.0;
        std::size_t k = 0;
        for (const auto& m : sets)
            if (m.*field) {
                mean += *(m.*field);
                ++k;
            }
        if (k == 0) return k;
        mean /= static_cast<double>(k);
        double var = 0.0;
        for (const auto& m : sets)
            if (m.*field) var += sq(*(m.*field) - mean);
        s.mean.*field = mean;
        s.sd.*field = std::sqrt(var / static_cast<double>(k));
        return k;
    };
    for (auto f : {&MetricSet::accuracy, &MetricSet::precision_macro, &MetricSet::recall_macro, &MetricSet::f1_macro,
                   &MetricSet::precision_weighted, &MetricSet::recall_weighted, &MetricSet::f1_weighted})
        plain(f);
    for (auto f : {&MetricSet::precision_pos, &MetricSet::recall_pos, &MetricSet::f1_pos}) optional(f);
    s.auc_n = optional(&MetricSet::auc);
    for (const auto& m : sets) s.mean.support += m.support;
    return s;
}

LouoReport run_louo(const Dataset& d, const EvalConfig& config) {
    return louo_with(prepare(d, config, config.scheme), config);
}

PersonalizationReport run_personalization(const Dataset& d, const EvalConfig& config) {
    const auto p = prepare(d, config, config.scheme);
    if (p.users.size() < 2) throw UsageError("personalization needs at least 2 users");
    PersonalizationReport r;
    r.config = config;
    std::vector<std::string> eligible;
    for (const auto& u : p.users) {
        const auto n = p.rows.at(u).size();
        if (n < kMinPersonalRecords)
            r.notices.push_back("skipped user " + u + ": " + std::to_string(n) + " records (< " +
                                std::to_string(kMinPersonalRecords) + ")");
        else
            eligible.push_back(u);
    }
    r.folds.resize(eligible.size());
    parallel_for(eligible.size(), config.threads, [&](std::size_t i) {
        const auto& user = eligible[i];
        const auto own = chronological(d, p, user);
        const auto k = static_cast<std::size_t>(std::floor(kPersonalTrainShare * static_cast<double>(own.size())));
        Split personal{{own.begin(), own.begin() + static_cast<std::ptrdiff_t>(k)},
                       {own.begin() + static_cast<std::ptrdiff_t>(k), own.end()}};
        Split general{rows_excluding(p, user), personal.test};
        const auto seed = fold_seed(config.seed, user);
        const auto ps = train_and_score(p.fm, personal, config.model, derive_seed(seed, kPersonalStream));
        const auto gs = train_and_score(p.fm, general, config.model, seed);
        auto& f = r.folds[i];
        f.user_id = user;
        f.n_personal_train = personal.train.size();
        f.n_general_train = general.train.size();
        f.n_test = personal.test.size();
        f.last_train_time = clicked(d, p, personal.train.back());
        f.first_test_time = clicked(d, p, personal.test.front());
        f.personal_fallback = ps.fallback;
        f.personal = ps.metrics;
        f.general = gs.metrics;
    });
    r.personal = summarize(collect(r.folds, [](const PersonalFold& f) { return f.personal; }));
    r.general = summarize(collect(r.folds, [](const PersonalFold& f) { return f.general; }));
    return r;
}

IncrementalReport run_incremental(const Dataset& d, const EvalConfig& config, const std::vector<double>& fractions) {
    if (fractions.empty()) throw UsageError("no fractions given");
    for (double f : fractions)
        if (!(f >= 0.0 && f <= 1.0)) throw UsageError("fractions must lie in [0, 1]");
    const auto p = prepare(d, config, config.scheme);
    if (p.users.size() < 2) throw UsageError("incremental evaluation needs at least 2 users");
    IncrementalReport r;
    r.config = config;
    r.fractions = fractions;
    std::vector<std::string> eligible;
    for (const auto& u : p.users) {
        const auto n = p.rows.at(u).size();
        if (n < kMinPersonalRecords)
            r.notices.push_back("skipped user " + u + ": " + std::to_string(n) + " records (< " +
                                std::to_string(kMinPersonalRecords) + ")");
        else
            eligible.push_back(u);
    }
    const std::size_t nf = fractions.size();
    r.points.resize(eligible.size() * nf);
    parallel_for(r.points.size(), config.threads, [&](std::size_t idx) {
        const auto& user = eligible[idx / nf];
        const double frac = fractions[idx % nf];
        const auto own = chronological(d, p, user);
        const auto pool =
            static_cast<std::size_t>(std::floor(kIncrementalPoolShare * static_cast<double>(own.size())));
        const auto take = static_cast<std::size_t>(std::floor(frac * static_cast<double>(pool)));
        Split s{rows_excluding(p, user), {own.begin() + static_cast<std::ptrdiff_t>(pool), own.end()}};
        s.train.insert(s.train.end(), own.begin(), own.begin() + static_cast<std::ptrdiff_t>(take));
        const auto scored = train_and_score(p.fm, s, config.model, fold_seed(config.seed, user));
        r.points[idx] = {user, frac, take, s.test.size(), scored.metrics};
    });
    for (std::size_t j = 0; j < nf; ++j) {
        std::vector<MetricSet> at;
        for (std::size_t u = 0; u < eligible.size(); ++u) at.push_back(r.points[u * nf + j].metrics);
        r.curve.push_back(summarize(at));
    }
    return r;
}

AblationReport run_ablation(const Dataset& d, const EvalConfig& config) {
    AblationReport r;
    for (auto scheme : {SchemeName::CONTEXT_ONLY, SchemeName::DISTRACTION_ONLY, SchemeName::FULL}) {
        EvalConfig c = config;
        c.scheme = scheme;
        r.runs.push_back(louo_with(prepare(d, c, scheme), c));
    }
    return r;
}

ProfilePredicate parse_group(std::string_view expr) {
    const auto eq = expr.find('=');
    if (eq == std::string_view::npos)
        throw UsageError("group must be field=value (fields: gender, occupation, education, phone_brand)");
    const std::string field(expr.substr(0, eq));
    const std::string value(expr.substr(eq + 1));
    if (field == "gender") {
        const auto g = from_token<Gender>(value);
        if (!g) throw UsageError("unknown gender '" + value + "' (valid: " + allowed_tokens<Gender>() + ")");
        return [g = *g](const UserProfile& p) { return p.gender == g; };
    }
    if (field == "occupation") {
        const auto o = from_token<Occupation>(value);
        if (!o) throw UsageError("unknown occupation '" + value + "' (valid: " + allowed_tokens<Occupation>() + ")");
        return [o = *o](const UserProfile& p) { return p.occupation == o; };
    }
    if (field == "education") return [value](const UserProfile& p) { return p.education == value; };
    if (field == "phone_brand") return [value](const UserProfile& p) { return p.phone_brand == value; };
    throw UsageError("unknown group field '" + field + "' (valid: gender, occupation, education, phone_brand)");
}

GroupReport run_group_model(const Dataset& d, const ProfilePredicate& in_group, const EvalConfig& config,
                            std::string group_name) {
    const auto p = prepare(d, config, config.scheme);
    std::vector<std::string> members;
    for (const auto& u : p.users) {
        const auto* prof = d.profile(u);
        if (prof && in_group(*prof)) members.push_back(u);
    }
    if (members.size() < 2)
        throw UsageError("group '" + group_name + "' has " + std::to_string(members.size()) +
                         " users with records; need at least 2");
    GroupReport r;
    r.config = config;
    r.group_name = std::move(group_name);
    r.folds.resize(members.size());
    parallel_for(members.size(), config.threads, [&](std::size_t i) {
        const auto& user = members[i];
        Split group{{}, p.rows.at(user)};
        for (std::size_t row = 0; row < p.fm.n_rows; ++row) {
            const auto& owner = p.fm.user_ids[row];
            if (owner != user && std::binary_search(members.begin(), members.end(), owner)) group.train.push_back(row);
        }
        Split general{rows_excluding(p, user), group.test};
        const auto seed = fold_seed(config.seed, user);
        const auto gs = train_and_score(p.fm, group, config.model, derive_seed(seed, kGroupStream));
        const auto ws = train_and_score(p.fm, general, config.model, seed);
        r.folds[i] = {user, group.train.size(), general.train.size(), group.test.size(), gs.metrics, ws.metrics};
    });
    r.group = summarize(collect(r.folds, [](const GroupFold& f) { return f.group; }));
    r.general = summarize(collect(r.folds, [](const GroupFold& f) { return f.general; }));
    return r;
}

}  // namespace attentrack
