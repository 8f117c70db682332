#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace attentrack {

// Row-major dense matrix view.
struct MatrixView {
    std::span<const double> data;
    std::size_t rows = 0;
    std::size_t cols = 0;

    MatrixView() = default;
    MatrixView(std::span<const double> d, std::size_t r, std::size_t c);
    std::span<const double> row(std::size_t i) const { return data.subspan(i * cols, cols); }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

enum class Criterion { gini, friedman_mse };
enum class MaxFeatures { all, sqrt };

struct TreeParams {
    Criterion criterion = Criterion::gini;
    std::optional<int> max_depth;
    int min_samples_split = 2;
    int min_samples_leaf = 1;
    double min_impurity_decrease = 0.0;
    MaxFeatures max_features = MaxFeatures::all;
    std::uint64_t seed = 0;
};

// Number of features examined per node: all, or ceil(sqrt(D)).
std::size_t features_per_node(MaxFeatures mf, std::size_t n_features);

// Fitted binary tree in flattened form. Node 0 is the root; children come after
// their parent (preorder). A sample goes left when x[feature] <= threshold.
class Tree {
public:
    std::vector<int> feature;          // -1 marks a leaf
    std::vector<double> threshold;
    std::vector<int> left;
    std::vector<int> right;
    std::vector<double> value;         // value_width entries per node
    std::vector<double> improvement;   // weighted impurity decrease of the split (0 at leaves)
    std::vector<double> node_weight;   // total sample weight reaching the node in training
    std::size_t value_width = 1;

    std::size_t node_count() const noexcept { return feature.size(); }
    bool is_leaf(std::size_t node) const { return feature[node] < 0; }
    std::size_t depth() const;
    std::size_t leaf_of(std::span<const double> x) const;
    std::span<const double> node_value(std::size_t node) const {
        return {value.data() + node * value_width, value_width};
    }
    std::span<double> node_value(std::size_t node) { return {value.data() + node * value_width, value_width}; }

    nlohmann::json to_json() const;
    static Tree from_json(const nlohmann::json& j);
};

// Per-column sorted distinct values and, per cell, the index of its value.
// Built once per ensemble fit; every tree over a subset of the rows reuses it.
class BinnedMatrix {
public:
    explicit BinnedMatrix(MatrixView x);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::uint32_t code(std::size_t feature, std::size_t row) const { return codes_[feature * rows_ + row]; }
    const std::uint32_t* column(std::size_t feature) const { return codes_.data() + feature * rows_; }
    const std::vector<double>& values(std::size_t feature) const { return values_[feature]; }

    // Two-valued features, also stored as a row-major 0/1 block whose rows are
    // zero-padded to indicator_stride() columns.
    std::size_t binary_count() const noexcept { return binary_features_.size(); }
    std::size_t indicator_stride() const noexcept { return indicator_stride_; }
    int binary_slot(std::size_t feature) const { return binary_slot_[feature]; }
    std::span<const double> indicators() const noexcept { return indicators_; }

    // Rows ordered by (code, row) for features with more than kOrderedBins
    // distinct values; empty otherwise.
    static constexpr std::size_t kOrderedBins = 64;
    std::span<const std::uint32_t> order(std::size_t feature) const { return order_[feature]; }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<std::uint32_t> codes_;  // column-major
    std::vector<std::vector<double>> values_;
    std::vector<std::size_t> binary_features_;
    std::vector<int> binary_slot_;
    std::size_t indicator_stride_ = 0;
    std::vector<std::vector<std::uint32_t>> order_;
    std::vector<double> indicators_;
};

// Training targets for one tree. Exactly one of `labels` / `targets` is set.
struct TreeTargets {
    std::span<const int> labels;      // classification, values in [0, n_classes)
    std::size_t n_classes = 0;
    std::span<const double> targets;  // regression
};

struct TreeFit {
    Tree tree;
    std::vector<int> sample_leaf;  // leaf node of every training row (-1 for zero-weight rows)
};

// Greedy CART over a pre-binned matrix. Rows with zero weight are ignored.
// Empty `weights` means unit weights.
TreeFit build_tree(const BinnedMatrix& bins, const TreeTargets& targets, std::span<const double> weights,
                   const TreeParams& params);

// Classification tree (criterion must be gini). Leaves hold weighted class frequencies.
Tree fit_tree(MatrixView x, std::span<const int> y, std::span<const double> weights, const TreeParams& params,
              std::size_t n_classes = 0);

// Regression tree (criterion must be friedman_mse). Leaves hold weighted means.
Tree fit_regression_tree(MatrixView x, std::span<const double> y, std::span<const double> weights,
                         const TreeParams& params);

}  // namespace attentrack
