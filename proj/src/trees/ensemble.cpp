#include "attentrack/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "attentrack/error.hpp"
#include "attentrack/kernels.hpp"
#include "attentrack/parallel.hpp"
#include "attentrack/rng.hpp"

namespace attentrack {
namespace {

std::vector<int> present_classes(std::span<const int> y, std::size_t n_classes) {
    std::vector<char> seen(n_classes, 0);
    for (int c : y) {
        if (c < 0 || static_cast<std::size_t>(c) >= n_classes) throw UsageError("label out of range");
        seen[static_cast<std::size_t>(c)] = 1;
    }
    std::vector<int> out;
    for (std::size_t c = 0; c < n_classes; ++c)
        if (seen[c]) out.push_back(static_cast<int>(c));
    return out;
}

void check_inputs(MatrixView x, std::span<const int> y, const std::vector<std::string>& class_names) {
    if (x.rows == 0 || x.cols == 0) throw UsageError("training matrix is empty");
    if (y.size() != x.rows) throw UsageError("X and y lengths differ");
    if (class_names.size() < 2) throw UsageError("need at least two class names");
}

double expit(double r) { return 1.0 / (1.0 + std::exp(-r)); }

double log1pexp(double r) { return r > 0.0 ? r + std::log1p(std::exp(-r)) : std::log1p(std::exp(r)); }

double logsumexp(std::span<const double> v) {
    const double m = *std::max_element(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

const char* criterion_name(Criterion c) { return c == Criterion::gini ? "gini" : "friedman_mse"; }
Criterion criterion_from(const std::string& s) {
    if (s == "gini") return Criterion::gini;
    if (s == "friedman_mse") return Criterion::friedman_mse;
    throw SchemaError(0, "criterion", "unknown criterion '" + s + "'");
}

}  // namespace

std::vector<double> softmax(std::span<const double> scores) {
    std::vector<double> p(scores.size());
    const double m = *std::max_element(scores.begin(), scores.end());
    double s = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        p[i] = std::exp(scores[i] - m);
        s += p[i];
    }
    for (double& v : p) v /= s;
    return p;
}

std::vector<double> balanced_class_weights(std::span<const int> y, std::size_t n_classes) {
    std::vector<double> counts(n_classes, 0.0);
    for (int c : y) {
        if (c < 0 || static_cast<std::size_t>(c) >= n_classes) throw UsageError("label out of range");
        counts[static_cast<std::size_t>(c)] += 1.0;
    }
    const double k = static_cast<double>(std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }));
    const double n = static_cast<double>(y.size());
    std::vector<double> w(n_classes, 0.0);
    for (std::size_t c = 0; c < n_classes; ++c)
        if (counts[c] > 0) w[c] = n / (k * counts[c]);
    return w;
}

EnsembleModel fit_forest(MatrixView x, std::span<const int> y, const std::vector<std::string>& class_names,
                         const ForestParams& params, std::span<const std::uint64_t> row_keys) {
    check_inputs(x, y, class_names);
    if (params.n_estimators < 1) throw UsageError("n_estimators must be >= 1");
    if (params.criterion != Criterion::gini) throw UsageError("forest criterion must be gini");
    const std::size_t k = class_names.size();
    const auto present = present_classes(y, k);
    if (present.size() < 2) throw UsageError("fit_forest: y contains a single class; classifier is undefined");

    // Canonical row order.
    std::vector<double> x_sorted;
    std::vector<int> y_sorted;
    if (!row_keys.empty()) {
        if (row_keys.size() != x.rows) throw UsageError("row_keys length mismatch");
        std::vector<std::size_t> order(x.rows);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return row_keys[a] < row_keys[b]; });
        x_sorted.reserve(x.data.size());
        y_sorted.reserve(x.rows);
        for (auto i : order) {
            auto r = x.row(i);
            x_sorted.insert(x_sorted.end(), r.begin(), r.end());
            y_sorted.push_back(y[i]);
        }
        x = MatrixView(x_sorted, x.rows, x.cols);
        y = y_sorted;
    }

    const std::size_t n = x.rows;
    const std::vector<double> class_weight =
        params.class_weight == ClassWeight::balanced ? balanced_class_weights(y, k) : std::vector<double>(k, 1.0);
    const BinnedMatrix bins(x);

    EnsembleModel m;
    m.kind_ = ModelKind::forest;
    m.class_names_ = class_names;
    m.n_features_ = x.cols;
    m.params_ = params;
    m.trained_classes_ = present;
    m.trees_.resize(static_cast<std::size_t>(params.n_estimators));

    parallel_for(m.trees_.size(), params.threads, [&](std::size_t t) {
        Rng rng(derive_seed(params.seed, t));
        std::vector<double> w(n, 0.0);
        if (params.bootstrap) {
            for (std::size_t draw = 0; draw < n; ++draw) w[uniform_index(rng, n)] += 1.0;
        } else {
            std::fill(w.begin(), w.end(), 1.0);
        }
        for (std::size_t i = 0; i < n; ++i) w[i] *= class_weight[static_cast<std::size_t>(y[i])];
        TreeParams tp;
        tp.criterion = Criterion::gini;
        tp.max_depth = params.max_depth;
        tp.min_samples_split = params.min_samples_split;
        tp.min_samples_leaf = params.min_samples_leaf;
        tp.max_features = params.max_features;
        tp.seed = rng();
        m.trees_[t] = build_tree(bins, TreeTargets{y, k, {}}, w, tp).tree;
    });
    return m;
}

EnsembleModel fit_gbm(MatrixView x, std::span<const int> y, const std::vector<std::string>& class_names,
                      const GbmParams& params) {
    check_inputs(x, y, class_names);
    if (params.n_estimators < 1) throw UsageError("n_estimators must be >= 1");
    if (!(params.learning_rate > 0.0)) throw UsageError("learning_rate must be > 0");
    if (!(params.subsample > 0.0 && params.subsample <= 1.0)) throw UsageError("subsample must be in (0, 1]");
    if (params.criterion != Criterion::friedman_mse) throw UsageError("gbm criterion must be friedman_mse");
    const auto present = present_classes(y, class_names.size());
    if (present.size() < 2) throw UsageError("fit_gbm: y contains a single class; classifier is undefined");

    const std::size_t n = x.rows;
    const std::size_t kp = present.size();
    std::vector<int> yi(n);
    for (std::size_t i = 0; i < n; ++i)
        yi[i] = static_cast<int>(std::lower_bound(present.begin(), present.end(), y[i]) - present.begin());

    EnsembleModel m;
    m.kind_ = ModelKind::gbm;
    m.class_names_ = class_names;
    m.n_features_ = x.cols;
    m.params_ = params;
    m.trained_classes_ = present;

    std::vector<double> prior(kp, 0.0);
    for (int c : yi) prior[static_cast<std::size_t>(c)] += 1.0;
    for (double& p : prior) p /= static_cast<double>(n);

    const bool binary = kp == 2;
    const std::size_t score_dims = binary ? 1 : kp;
    if (binary) {
        m.init_scores_ = {std::log(prior[1] / prior[0])};
    } else {
        for (double p : prior) m.init_scores_.push_back(std::log(p));
    }
    // raw[k][i], one column per score dimension
    std::vector<std::vector<double>> raw(score_dims);
    for (std::size_t k = 0; k < score_dims; ++k) raw[k].assign(n, m.init_scores_[k]);

    auto deviance = [&] {
        double total = 0.0;
        std::vector<double> row(kp);
        for (std::size_t i = 0; i < n; ++i) {
            if (binary) {
                total += (yi[i] == 1 ? raw[0][i] : 0.0) - log1pexp(raw[0][i]);
            } else {
                for (std::size_t k = 0; k < kp; ++k) row[k] = raw[k][i];
                total += row[static_cast<std::size_t>(yi[i])] - logsumexp(row);
            }
        }
        return -2.0 * total / static_cast<double>(n);
    };
    m.train_deviance_.push_back(deviance());

    const BinnedMatrix bins(x);
    TreeParams tp;
    tp.criterion = Criterion::friedman_mse;
    tp.max_depth = params.max_depth;
    tp.min_samples_split = params.min_samples_split;
    tp.min_samples_leaf = params.min_samples_leaf;
    tp.max_features = MaxFeatures::all;

    std::vector<double> prob(n * kp);
    std::vector<double> residual(n);
    std::vector<double> update(n);
    std::vector<double> sample_mask;
    std::vector<double> row(kp);
    const double kfactor = binary ? 1.0 : static_cast<double>(kp - 1) / static_cast<double>(kp);

    for (int stage = 0; stage < params.n_estimators; ++stage) {
        Rng rng(derive_seed(params.seed, static_cast<std::uint64_t>(stage)));
        if (params.subsample < 1.0) {
            const auto take = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::floor(params.subsample * static_cast<double>(n))));
            std::vector<std::size_t> idx(n);
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            for (std::size_t i = 0; i < take; ++i) std::swap(idx[i], idx[i + uniform_index(rng, n - i)]);
            sample_mask.assign(n, 0.0);
            for (std::size_t i = 0; i < take; ++i) sample_mask[idx[i]] = 1.0;
        }
        // Probabilities from the scores at the start of the stage.
        for (std::size_t i = 0; i < n; ++i) {
            if (binary) {
                const double p1 = expit(raw[0][i]);
                prob[i * kp] = 1.0 - p1;
                prob[i * kp + 1] = p1;
            } else {
                for (std::size_t k = 0; k < kp; ++k) row[k] = raw[k][i];
                const auto p = softmax(row);
                std::copy(p.begin(), p.end(), prob.begin() + static_cast<std::ptrdiff_t>(i * kp));
            }
        }
        for (std::size_t k = 0; k < score_dims; ++k) {
            const std::size_t cls = binary ? 1 : k;
            for (std::size_t i = 0; i < n; ++i)
                residual[i] = (static_cast<std::size_t>(yi[i]) == cls ? 1.0 : 0.0) - prob[i * kp + cls];
            tp.seed = rng();
            auto fit = build_tree(bins, TreeTargets{{}, 0, residual}, sample_mask, tp);
            Tree& tree = fit.tree;
            // Newton step per leaf.
            std::vector<double> num(tree.node_count(), 0.0);
            std::vector<double> den(tree.node_count(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const int leaf = fit.sample_leaf[i];
                if (leaf < 0) continue;
                const double p = prob[i * kp + cls];
                num[static_cast<std::size_t>(leaf)] += residual[i];
                den[static_cast<std::size_t>(leaf)] += p * (1.0 - p);
            }
            for (std::size_t node = 0; node < tree.node_count(); ++node) {
                if (!tree.is_leaf(node)) continue;
                tree.value[node] = std::abs(den[node]) < 1e-150 ? 0.0 : kfactor * num[node] / den[node];
            }
            for (std::size_t i = 0; i < n; ++i) {
                const int leaf = fit.sample_leaf[i];
                update[i] = tree.value[leaf >= 0 ? static_cast<std::size_t>(leaf) : tree.leaf_of(x.row(i))];
            }
            kernels::axpy(params.learning_rate, update, raw[k]);
            m.trees_.push_back(std::move(tree));
        }
        m.train_deviance_.push_back(deviance());
    }
    return m;
}

void EnsembleModel::check_dimension(std::size_t d) const {
    if (d != n_features_)
        throw UsageError("input has " + std::to_string(d) + " features, model expects " + std::to_string(n_features_));
}

std::vector<double> EnsembleModel::raw_scores(std::span<const double> x) const {
    check_dimension(x.size());
    if (kind_ != ModelKind::gbm) throw UsageError("raw_scores is only defined for boosted models");
    const auto& gp = std::get<GbmParams>(params_);
    std::vector<double> raw = init_scores_;
    const std::size_t dims = raw.size();
    for (std::size_t t = 0; t < trees_.size(); ++t) {
        const auto& tree = trees_[t];
        const double v = tree.value[tree.leaf_of(x)];
        raw[t % dims] = raw[t % dims] + gp.learning_rate * v;
    }
    return raw;
}

std::vector<double> EnsembleModel::predict_proba(std::span<const double> x) const {
    check_dimension(x.size());
    std::vector<double> proba(class_names_.size(), 0.0);
    if (kind_ == ModelKind::forest) {
        for (const auto& tree : trees_) {
            const auto v = tree.node_value(tree.leaf_of(x));
            for (std::size_t c = 0; c < proba.size(); ++c) proba[c] += v[c];
        }
        for (double& p : proba) p /= static_cast<double>(trees_.size());
        return proba;
    }
    const auto raw = raw_scores(x);
    if (trained_classes_.size() == 2) {
        const double p1 = expit(raw[0]);
        proba[static_cast<std::size_t>(trained_classes_[0])] = 1.0 - p1;
        proba[static_cast<std::size_t>(trained_classes_[1])] = p1;
    } else {
        const auto p = softmax(raw);
        for (std::size_t k = 0; k < p.size(); ++k) proba[static_cast<std::size_t>(trained_classes_[k])] = p[k];
    }
    return proba;
}

int EnsembleModel::predict(std::span<const double> x) const {
    const auto p = predict_proba(x);
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

std::vector<double> EnsembleModel::predict_proba(MatrixView x) const {
    check_dimension(x.cols);
    std::vector<double> out;
    out.reserve(x.rows * class_names_.size());
    for (std::size_t i = 0; i < x.rows; ++i) {
        const auto p = predict_proba(x.row(i));
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

nlohmann::json EnsembleModel::to_json() const {
    nlohmann::json j;
    j["schema"] = kSchema;
    j["kind"] = kind_ == ModelKind::forest ? "forest" : "gbm";
    j["class_names"] = class_names_;
    j["n_features"] = n_features_;
    j["trained_classes"] = trained_classes_;
    if (kind_ == ModelKind::forest) {
        const auto& p = std::get<ForestParams>(params_);
        j["params"] = {{"n_estimators", p.n_estimators},
                       {"criterion", criterion_name(p.criterion)},
                       {"max_depth", p.max_depth ? nlohmann::json(*p.max_depth) : nlohmann::json(nullptr)},
                       {"max_features", p.max_features == MaxFeatures::sqrt ? "sqrt" : "all"},
                       {"class_weight", p.class_weight == ClassWeight::balanced ? "balanced" : "none"},
                       {"bootstrap", p.bootstrap},
                       {"min_samples_split", p.min_samples_split},
                       {"min_samples_leaf", p.min_samples_leaf},
                       {"seed", p.seed}};
    } else {
        const auto& p = std::get<GbmParams>(params_);
        j["params"] = {{"n_estimators", p.n_estimators},     {"learning_rate", p.learning_rate},
                       {"max_depth", p.max_depth},           {"criterion", criterion_name(p.criterion)},
                       {"subsample", p.subsample},           {"min_samples_split", p.min_samples_split},
                       {"min_samples_leaf", p.min_samples_leaf}, {"seed", p.seed}};
        j["init_scores"] = init_scores_;
        j["train_deviance"] = train_deviance_;
    }
    j["trees"] = nlohmann::json::array();
    for (const auto& t : trees_) j["trees"].push_back(t.to_json());
    return j;
}

EnsembleModel EnsembleModel::from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema").get<std::string>() != kSchema)
            throw SchemaError(0, "schema", "expected schema tag '" + std::string(kSchema) + "'");
        EnsembleModel m;
        const auto kind = j.at("kind").get<std::string>();
        if (kind != "forest" && kind != "gbm") throw SchemaError(0, "kind", "expected forest or gbm");
        m.kind_ = kind == "forest" ? ModelKind::forest : ModelKind::gbm;
        j.at("class_names").get_to(m.class_names_);
        j.at("n_features").get_to(m.n_features_);
        j.at("trained_classes").get_to(m.trained_classes_);
        const auto& p = j.at("params");
        std::size_t expected_trees = 0;
        if (m.kind_ == ModelKind::forest) {
            ForestParams fp;
            p.at("n_estimators").get_to(fp.n_estimators);
            fp.criterion = criterion_from(p.at("criterion").get<std::string>());
            if (!p.at("max_depth").is_null()) fp.max_depth = p.at("max_depth").get<int>();
            fp.max_features = p.at("max_features").get<std::string>() == "sqrt" ? MaxFeatures::sqrt : MaxFeatures::all;
            fp.class_weight =
                p.at("class_weight").get<std::string>() == "balanced" ? ClassWeight::balanced : ClassWeight::none;
            p.at("bootstrap").get_to(fp.bootstrap);
            p.at("min_samples_split").get_to(fp.min_samples_split);
            p.at("min_samples_leaf").get_to(fp.min_samples_leaf);
            p.at("seed").get_to(fp.seed);
            m.params_ = fp;
            expected_trees = static_cast<std::size_t>(fp.n_estimators);
        } else {
            GbmParams gp;
            p.at("n_estimators").get_to(gp.n_estimators);
            p.at("learning_rate").get_to(gp.learning_rate);
            p.at("max_depth").get_to(gp.max_depth);
            gp.criterion = criterion_from(p.at("criterion").get<std::string>());
            p.at("subsample").get_to(gp.subsample);
            p.at("min_samples_split").get_to(gp.min_samples_split);
            p.at("min_samples_leaf").get_to(gp.min_samples_leaf);
            p.at("seed").get_to(gp.seed);
            m.params_ = gp;
            j.at("init_scores").get_to(m.init_scores_);
            if (j.contains("train_deviance")) j.at("train_deviance").get_to(m.train_deviance_);
            const std::size_t dims = m.trained_classes_.size() == 2 ? 1 : m.trained_classes_.size();
            if (m.init_scores_.size() != dims) throw SchemaError(0, "init_scores", "wrong length");
            expected_trees = static_cast<std::size_t>(gp.n_estimators) * dims;
        }
        for (const auto& t : j.at("trees")) m.trees_.push_back(Tree::from_json(t));
        if (m.trees_.size() != expected_trees)
            throw SchemaError(0, "trees", "expected " + std::to_string(expected_trees) + " trees, found " +
                                              std::to_string(m.trees_.size()));
        for (int c : m.trained_classes_)
            if (c < 0 || static_cast<std::size_t>(c) >= m.class_names_.size())
                throw SchemaError(0, "trained_classes", "class index out of range");
        if (m.kind_ == ModelKind::forest) {
            for (const auto& t : m.trees_) {
                if (t.value_width != m.class_names_.size())
                    throw SchemaError(0, "value_width", "leaf width does not match class count");
                for (std::size_t node = 0; node < t.node_count(); ++node) {
                    if (!t.is_leaf(node)) continue;
                    const auto v = t.node_value(node);
                    const double s = std::accumulate(v.begin(), v.end(), 0.0);
                    if (std::abs(s - 1.0) > 1e-9) throw SchemaError(0, "value", "leaf distribution does not sum to 1");
                }
            }
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(0, "", std::string("malformed model JSON: ") + e.what());
    }
}

void EnsembleModel::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write model file '" + path + "'");
    out << to_json().dump(1) << '\n';
}

EnsembleModel EnsembleModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(0, "", std::string("model file is not valid JSON: ") + e.what());
    }
    return from_json(j);
}

}  // namespace attentrack
