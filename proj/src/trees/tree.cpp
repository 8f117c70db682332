#include "attentrack/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "attentrack/error.hpp"
#include "attentrack/kernels.hpp"
#include "attentrack/rng.hpp"

namespace attentrack {
namespace {

// Splits whose weighted impurity decrease is below kRelTol * (node scale) count as zero.
constexpr double kRelTol = 1e-12;

// Histogram accumulation when the node has at least bins/kDenseRatio samples;
// otherwise gather and sort the node's codes.
constexpr std::size_t kDenseRatio = 4;

struct Split {
    bool found = false;
    std::size_t feature = 0;
    std::uint32_t code = 0;  // rows with code <= this go left
    double threshold = 0.0;
    double proxy = -std::numeric_limits<double>::infinity();
};

class Builder {
public:
    Builder(const BinnedMatrix& bins, const TreeTargets& targets, std::span<const double> weights,
            const TreeParams& params)
        : bins_(bins), targets_(targets), weights_(weights), params_(params), rng_(params.seed) {
        classification_ = params.criterion == Criterion::gini;
        channels_ = classification_ ? targets.n_classes : 2;
        if (classification_ && channels_ == 0) throw UsageError("build_tree: n_classes must be positive");
        m_features_ = features_per_node(params.max_features, bins.cols());
        feature_order_.resize(bins.cols());
        // Regression with every feature scanned at each node (boosting).
        use_indicators_ = !classification_ && m_features_ >= bins.cols() && bins.binary_count() > 0;
    }

    TreeFit run() {
        const std::size_t n = bins_.rows();
        TreeFit fit;
        fit.sample_leaf.assign(n, -1);
        samples_.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
            if (weights_.empty() || weights_[i] > 0.0) samples_.push_back(static_cast<std::uint32_t>(i));
        if (samples_.empty()) throw UsageError("build_tree: no rows with positive weight");
        tree_.value_width = classification_ ? channels_ : 1;
        scratch_.resize(n);
        ordered_slot_.assign(bins_.cols(), -1);
        for (std::size_t f = 0; f < bins_.cols(); ++f) {
            const auto order = bins_.order(f);
            if (order.empty()) continue;
            ordered_slot_[f] = static_cast<int>(ordered_.size());
            auto& list = ordered_.emplace_back();
            list.reserve(samples_.size());
            for (const auto s : order)
                if (weights_.empty() || weights_[s] > 0.0) list.push_back(s);
        }
        if (!ordered_.empty()) goes_left_.assign(n, 0);
        grow(0, samples_.size(), 0, fit.sample_leaf);
        fit.tree = std::move(tree_);
        return fit;
    }

private:
    double weight(std::uint32_t s) const { return weights_.empty() ? 1.0 : weights_[s]; }

    // Adds sample s to an accumulator of `channels_` doubles.
    void accumulate(double* acc, std::uint32_t s) const {
        const double w = weight(s);
        if (classification_) {
            acc[targets_.labels[s]] += w;
        } else {
            acc[0] += w;
            acc[1] += w * targets_.targets[s];
        }
    }

    int grow(std::size_t begin, std::size_t end, int depth, std::vector<int>& sample_leaf) {
        const int node = static_cast<int>(tree_.feature.size());
        tree_.feature.push_back(-1);
        tree_.threshold.push_back(0.0);
        tree_.left.push_back(-1);
        tree_.right.push_back(-1);
        tree_.improvement.push_back(0.0);
        tree_.value.resize(tree_.value.size() + tree_.value_width, 0.0);

        // Node totals.
        std::vector<double> totals(channels_, 0.0);
        double sum_sq = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            const auto s = samples_[i];
            accumulate(totals.data(), s);
            if (!classification_) sum_sq += weight(s) * targets_.targets[s] * targets_.targets[s];
        }
        double node_weight = 0.0;
        if (classification_) {
            for (double t : totals) node_weight += t;
        } else {
            node_weight = totals[0];
        }
        tree_.node_weight.push_back(node_weight);
        if (depth == 0) root_weight_ = node_weight;

        auto value = tree_.node_value(static_cast<std::size_t>(node));
        double parent_proxy = 0.0;  // sum T^2 / W (gini) ; S^2 / W (mse)
        bool pure = false;
        if (classification_) {
            int nonzero = 0;
            for (std::size_t c = 0; c < channels_; ++c) {
                value[c] = totals[c] / node_weight;
                parent_proxy += totals[c] * totals[c];
                nonzero += totals[c] > 0.0;
            }
            parent_proxy /= node_weight;
            pure = nonzero <= 1;
        } else {
            value[0] = totals[1] / node_weight;
            parent_proxy = totals[1] * totals[1] / node_weight;
            const double sse = sum_sq - parent_proxy;
            pure = sse <= kRelTol * std::max(sum_sq, std::numeric_limits<double>::min());
        }

        const std::size_t count = end - begin;
        const bool depth_limited = params_.max_depth && depth >= *params_.max_depth;
        const bool too_small = count < static_cast<std::size_t>(params_.min_samples_split) ||
                               count < 2 * static_cast<std::size_t>(params_.min_samples_leaf);
        Split best;
        if (!pure && !depth_limited && !too_small) best = find_split(begin, end, totals);

        double decrease = 0.0;
        if (best.found) {
            decrease = classification_ ? best.proxy - parent_proxy : best.proxy / node_weight;
            const double scale = classification_ ? parent_proxy : sum_sq;
            if (!(decrease > kRelTol * scale) || decrease / root_weight_ < params_.min_impurity_decrease)
                best.found = false;
        }

        if (!best.found) {
            for (std::size_t i = begin; i < end; ++i) sample_leaf[samples_[i]] = node;
            return node;
        }

        // Stable partition keeps both children in ascending row order.
        const std::uint32_t* col = bins_.column(best.feature);
        std::size_t n_left = 0;
        std::size_t n_right = 0;
        for (std::size_t i = begin; i < end; ++i) {
            const auto s = samples_[i];
            if (col[s] <= best.code)
                samples_[begin + n_left++] = s;
            else
                scratch_[n_right++] = s;
        }
        std::copy_n(scratch_.begin(), n_right, samples_.begin() + static_cast<std::ptrdiff_t>(begin + n_left));
        if (!ordered_.empty()) {
            for (std::size_t i = begin; i < end; ++i) goes_left_[samples_[i]] = i < begin + n_left;
            for (auto& list : ordered_) {
                std::size_t l = 0;
                std::size_t r = 0;
                for (std::size_t i = begin; i < end; ++i) {
                    const auto s = list[i];
                    if (goes_left_[s])
                        list[begin + l++] = s;
                    else
                        scratch_[r++] = s;
                }
                std::copy_n(scratch_.begin(), r, list.begin() + static_cast<std::ptrdiff_t>(begin + l));
            }
        }

        tree_.feature[node] = static_cast<int>(best.feature);
        tree_.threshold[node] = best.threshold;
        tree_.improvement[node] = decrease / root_weight_;
        const int l = grow(begin, begin + n_left, depth + 1, sample_leaf);
        tree_.left[node] = l;
        const int r = grow(begin + n_left, end, depth + 1, sample_leaf);
        tree_.right[node] = r;
        return node;
    }

    Split find_split(std::size_t begin, std::size_t end, const std::vector<double>& totals) {
        Split best;
        const std::size_t d = bins_.cols();
        std::iota(feature_order_.begin(), feature_order_.end(), std::size_t{0});
        if (use_indicators_) indicator_sums(begin, end);
        std::size_t evaluated = 0;
        for (std::size_t i = 0; i < d && evaluated < m_features_; ++i) {
            if (m_features_ < d) {
                const std::size_t j = i + uniform_index(rng_, d - i);
                std::swap(feature_order_[i], feature_order_[j]);
            }
            const std::size_t f = feature_order_[i];
            if (!collect_groups(f, begin, end)) continue;  // constant in this node
            ++evaluated;
            evaluate_feature(f, totals, best);
        }
        return best;
    }

    // Per-code weight, weighted target and count of every binary feature over
    // the node. Same summation order as the histogram path.
    void indicator_sums(std::size_t begin, std::size_t end) {
        const std::size_t nb = bins_.indicator_stride();
        const std::span<const std::uint32_t> rows(samples_.data() + begin, end - begin);
        node_w_.resize(weights_.empty() ? 0 : rows.size());
        node_wt_.resize(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double w = weight(rows[i]);
            if (!weights_.empty()) node_w_[i] = w;
            node_wt_[i] = w * targets_.targets[rows[i]];
        }
        ind_on_.resize(3 * nb);
        ind_off_.resize(3 * nb);
        kernels::indicator_sums(bins_.indicators(), nb, rows, node_w_, node_wt_, ind_on_, ind_off_);
    }

    // Fills group_codes_/group_acc_/group_count_ for feature f over the node's
    // samples, in ascending code order. Returns false if fewer than two groups.
    bool collect_groups(std::size_t f, std::size_t begin, std::size_t end) {
        const std::uint32_t* col = bins_.column(f);
        const std::size_t n_bins = bins_.values(f).size();
        const std::size_t count = end - begin;
        group_codes_.clear();
        group_acc_.clear();
        group_count_.clear();
        if (n_bins < 2) return false;

        if (use_indicators_ && n_bins == 2) {
            const std::size_t nb = bins_.indicator_stride();
            const auto k = static_cast<std::size_t>(bins_.binary_slot(f));
            const auto n0 = static_cast<std::size_t>(ind_off_[2 * nb + k]);
            const auto n1 = static_cast<std::size_t>(ind_on_[2 * nb + k]);
            if (n0 == 0 || n1 == 0) return false;
            group_codes_ = {0, 1};
            group_count_ = {n0, n1};
            group_acc_.resize(2 * channels_);
            for (std::size_t c = 0; c < channels_; ++c) {
                group_acc_[c] = ind_off_[c * nb + k];
                group_acc_[channels_ + c] = ind_on_[c * nb + k];
            }
            return true;
        }

        if (const int k = ordered_slot_[f]; k >= 0) {
            const auto& list = ordered_[static_cast<std::size_t>(k)];
            group_runs(col, std::span<const std::uint32_t>(list).subspan(begin, count));
        } else if (count * kDenseRatio >= n_bins) {
            hist_.assign(n_bins * channels_, 0.0);
            hist_count_.assign(n_bins, 0);
            for (std::size_t i = begin; i < end; ++i) {
                const auto s = samples_[i];
                const auto b = col[s];
                accumulate(hist_.data() + b * channels_, s);
                ++hist_count_[b];
            }
            for (std::size_t b = 0; b < n_bins; ++b) {
                if (hist_count_[b] == 0) continue;
                group_codes_.push_back(static_cast<std::uint32_t>(b));
                group_acc_.insert(group_acc_.end(), hist_.begin() + static_cast<std::ptrdiff_t>(b * channels_),
                                  hist_.begin() + static_cast<std::ptrdiff_t>((b + 1) * channels_));
                group_count_.push_back(hist_count_[b]);
            }
        } else {
            pairs_.clear();
            for (std::size_t i = begin; i < end; ++i) pairs_.emplace_back(col[samples_[i]], samples_[i]);
            std::sort(pairs_.begin(), pairs_.end());
            sorted_rows_.resize(count);
            for (std::size_t i = 0; i < count; ++i) sorted_rows_[i] = pairs_[i].second;
            group_runs(col, sorted_rows_);
        }
        return group_codes_.size() >= 2;
    }

    // Groups from rows already ordered by code.
    void group_runs(const std::uint32_t* col, std::span<const std::uint32_t> rows) {
        group_codes_.resize(rows.size());
        group_count_.resize(rows.size());
        group_acc_.assign(rows.size() * channels_, 0.0);
        std::size_t g = 0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto s = rows[i];
            const auto code = col[s];
            if (i == 0 || group_codes_[g - 1] != code) {
                group_codes_[g] = code;
                group_count_[g] = 0;
                ++g;
            }
            accumulate(group_acc_.data() + (g - 1) * channels_, s);
            ++group_count_[g - 1];
        }
        group_codes_.resize(g);
        group_count_.resize(g);
        group_acc_.resize(g * channels_);
    }

    void evaluate_feature(std::size_t f, const std::vector<double>& totals, Split& best) {
        const std::size_t groups = group_codes_.size();
        const std::size_t positions = groups - 1;
        proxy_.resize(positions);
        if (classification_) {
            left_.assign(channels_ * positions, 0.0);
            for (std::size_t c = 0; c < channels_; ++c) {
                double run = 0.0;
                for (std::size_t p = 0; p < positions; ++p) {
                    run += group_acc_[p * channels_ + c];
                    left_[c * positions + p] = run;
                }
            }
            kernels::gini_proxy(left_, totals, positions, proxy_);
        } else {
            left_.resize(positions);
            left_sum_.resize(positions);
            double w = 0.0, s = 0.0;
            for (std::size_t p = 0; p < positions; ++p) {
                w += group_acc_[p * 2];
                s += group_acc_[p * 2 + 1];
                left_[p] = w;
                left_sum_[p] = s;
            }
            kernels::friedman_proxy(left_, left_sum_, totals[0], totals[1], proxy_);
        }

        const std::size_t min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);
        std::size_t total_count = 0;
        for (auto c : group_count_) total_count += c;
        std::size_t left_count = 0;
        for (std::size_t p = 0; p < positions; ++p) {
            left_count += group_count_[p];
            if (left_count < min_leaf || total_count - left_count < min_leaf) continue;
            const double v = proxy_[p];
            if (v > best.proxy || (best.found && v == best.proxy && f < best.feature)) {
                best.found = true;
                best.proxy = v;
                best.feature = f;
                best.code = group_codes_[p];
                const double lo = bins_.values(f)[group_codes_[p]];
                const double hi = bins_.values(f)[group_codes_[p + 1]];
                double mid = lo / 2.0 + hi / 2.0;
                if (!(mid < hi) || !std::isfinite(mid)) mid = lo;
                best.threshold = mid;
            }
        }
    }

    const BinnedMatrix& bins_;
    const TreeTargets& targets_;
    std::span<const double> weights_;
    const TreeParams& params_;
    Rng rng_;
    bool classification_ = true;
    std::size_t channels_ = 0;
    std::size_t m_features_ = 0;
    bool use_indicators_ = false;
    double root_weight_ = 1.0;

    Tree tree_;
    std::vector<std::uint32_t> samples_;
    std::vector<std::uint32_t> scratch_;
    std::vector<std::size_t> feature_order_;

    std::vector<std::uint32_t> group_codes_;
    std::vector<double> group_acc_;
    std::vector<std::size_t> group_count_;
    std::vector<double> hist_;
    std::vector<std::size_t> hist_count_;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs_;
    std::vector<std::uint32_t> sorted_rows_;
    std::vector<double> left_;
    std::vector<double> left_sum_;
    std::vector<double> proxy_;
    // Per-node row lists in code order for high-cardinality features.
    std::vector<int> ordered_slot_;
    std::vector<std::vector<std::uint32_t>> ordered_;
    std::vector<char> goes_left_;
    std::vector<double> node_w_;
    std::vector<double> node_wt_;
    std::vector<double> ind_on_;
    std::vector<double> ind_off_;
};

void check_params(const TreeParams& p) {
    if (p.max_depth && *p.max_depth < 0) throw UsageError("max_depth must be non-negative");
    if (p.min_samples_split < 2) throw UsageError("min_samples_split must be >= 2");
    if (p.min_samples_leaf < 1) throw UsageError("min_samples_leaf must be >= 1");
    if (p.min_impurity_decrease < 0.0) throw UsageError("min_impurity_decrease must be >= 0");
}

}  // namespace

MatrixView::MatrixView(std::span<const double> d, std::size_t r, std::size_t c) : data(d), rows(r), cols(c) {
    if (d.size() != r * c) throw UsageError("MatrixView: data size does not match rows x cols");
}

std::size_t features_per_node(MaxFeatures mf, std::size_t n_features) {
    if (mf == MaxFeatures::all) return n_features;
    return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_features))));
}

std::size_t Tree::depth() const {
    if (feature.empty()) return 0;
    std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
    std::size_t max_depth = 0;
    while (!stack.empty()) {
        auto [node, d] = stack.back();
        stack.pop_back();
        max_depth = std::max(max_depth, d);
        if (feature[node] >= 0) {
            stack.emplace_back(left[node], d + 1);
            stack.emplace_back(right[node], d + 1);
        }
    }
    return max_depth;
}

std::size_t Tree::leaf_of(std::span<const double> x) const {
    std::size_t node = 0;
    while (feature[node] >= 0) {
        node = static_cast<std::size_t>(x[static_cast<std::size_t>(feature[node])] <= threshold[node] ? left[node]
                                                                                                       : right[node]);
    }
    return node;
}

nlohmann::json Tree::to_json() const {
    return {{"feature", feature},       {"threshold", threshold},     {"left", left},
            {"right", right},           {"value", value},             {"value_width", value_width},
            {"improvement", improvement}, {"node_weight", node_weight}};
}

Tree Tree::from_json(const nlohmann::json& j) {
    Tree t;
    j.at("feature").get_to(t.feature);
    j.at("threshold").get_to(t.threshold);
    j.at("left").get_to(t.left);
    j.at("right").get_to(t.right);
    j.at("value").get_to(t.value);
    j.at("value_width").get_to(t.value_width);
    if (j.contains("improvement")) j.at("improvement").get_to(t.improvement);
    if (j.contains("node_weight")) j.at("node_weight").get_to(t.node_weight);
    const std::size_t n = t.feature.size();
    if (n == 0 || t.threshold.size() != n || t.left.size() != n || t.right.size() != n ||
        t.value.size() != n * t.value_width)
        throw SchemaError(0, "trees", "inconsistent node array lengths");
    for (std::size_t i = 0; i < n; ++i) {
        if (t.feature[i] < 0) continue;
        if (!std::isfinite(t.threshold[i])) throw SchemaError(0, "threshold", "non-finite split threshold");
        for (int child : {t.left[i], t.right[i]})
            if (child <= static_cast<int>(i) || child >= static_cast<int>(n))
                throw SchemaError(0, "trees", "child index out of order");
    }
    return t;
}

BinnedMatrix::BinnedMatrix(MatrixView x)
    : rows_(x.rows), cols_(x.cols), codes_(x.rows * x.cols), values_(x.cols), order_(x.cols) {
    std::vector<std::pair<double, std::uint32_t>> column(rows_);
    for (std::size_t j = 0; j < cols_; ++j) {
        for (std::size_t i = 0; i < rows_; ++i) {
            const double v = x.at(i, j);
            if (!std::isfinite(v)) throw UsageError("feature matrix contains a non-finite value");
            column[i] = {v, static_cast<std::uint32_t>(i)};
        }
        std::sort(column.begin(), column.end());
        auto& vals = values_[j];
        for (const auto& [v, i] : column) {
            if (vals.empty() || vals.back() != v) vals.push_back(v);
            codes_[j * rows_ + i] = static_cast<std::uint32_t>(vals.size() - 1);
        }
        if (vals.size() > kOrderedBins)
            for (const auto& [v, i] : column) order_[j].push_back(i);
    }
    binary_slot_.assign(cols_, -1);
    for (std::size_t j = 0; j < cols_; ++j) {
        if (values_[j].size() != 2) continue;
        binary_slot_[j] = static_cast<int>(binary_features_.size());
        binary_features_.push_back(j);
    }
    const std::size_t nb = binary_features_.size();
    indicator_stride_ = (nb + 15) / 16 * 16;
    indicators_.assign(rows_ * indicator_stride_, 0.0);
    for (std::size_t k = 0; k < nb; ++k)
        for (std::size_t i = 0; i < rows_; ++i)
            indicators_[i * indicator_stride_ + k] = static_cast<double>(codes_[binary_features_[k] * rows_ + i]);
}

TreeFit build_tree(const BinnedMatrix& bins, const TreeTargets& targets, std::span<const double> weights,
                   const TreeParams& params) {
    check_params(params);
    const std::size_t n = bins.rows();
    if (n == 0) throw UsageError("build_tree: empty training set");
    if (!weights.empty() && weights.size() != n) throw UsageError("build_tree: weights length mismatch");
    for (double w : weights)
        if (!(w >= 0.0) || !std::isfinite(w)) throw UsageError("build_tree: weights must be finite and >= 0");
    if (params.criterion == Criterion::gini) {
        if (targets.labels.size() != n) throw UsageError("build_tree: label length mismatch");
        for (int c : targets.labels)
            if (c < 0 || static_cast<std::size_t>(c) >= targets.n_classes)
                throw UsageError("build_tree: label out of range");
    } else if (targets.targets.size() != n) {
        throw UsageError("build_tree: target length mismatch");
    }
    return Builder(bins, targets, weights, params).run();
}

Tree fit_tree(MatrixView x, std::span<const int> y, std::span<const double> weights, const TreeParams& params,
              std::size_t n_classes) {
    if (params.criterion != Criterion::gini) throw UsageError("fit_tree: classification trees use gini");
    if (x.rows == 0) throw UsageError("fit_tree: empty training set");
    if (y.size() != x.rows) throw UsageError("fit_tree: X has " + std::to_string(x.rows) + " rows but y has " +
                                             std::to_string(y.size()));
    if (!weights.empty() && weights.size() != x.rows) throw UsageError("fit_tree: weights length mismatch");
    for (double w : weights)
        if (!(w > 0.0)) throw UsageError("fit_tree: weights must be positive");
    if (n_classes == 0) n_classes = static_cast<std::size_t>(*std::max_element(y.begin(), y.end())) + 1;
    const BinnedMatrix bins(x);
    return build_tree(bins, TreeTargets{y, n_classes, {}}, weights, params).tree;
}

Tree fit_regression_tree(MatrixView x, std::span<const double> y, std::span<const double> weights,
                         const TreeParams& params) {
    if (params.criterion != Criterion::friedman_mse)
        throw UsageError("fit_regression_tree: regression trees use friedman_mse");
    if (x.rows == 0) throw UsageError("fit_regression_tree: empty training set");
    if (y.size() != x.rows) throw UsageError("fit_regression_tree: length mismatch");
    const BinnedMatrix bins(x);
    return build_tree(bins, TreeTargets{{}, 0, y}, weights, params).tree;
}

}  // namespace attentrack
