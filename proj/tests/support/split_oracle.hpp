#pragma once

// Brute-force reference for the root split of a gini tree: enumerate every
// feature and every midpoint between consecutive distinct values, score each
// candidate from scratch.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

#include "attentrack/tree.hpp"

namespace oracle {

struct Fixture {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> x;  // row-major
    std::vector<int> y;
    std::size_t n_classes = 2;
    attentrack::MatrixView view() const { return {x, rows, cols}; }
};

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double decrease = -std::numeric_limits<double>::infinity();
};

inline double weighted_gini(const std::vector<double>& counts) {
    double w = 0.0;
    for (double c : counts) w += c;
    if (w == 0.0) return 0.0;
    double s = 0.0;
    for (double c : counts) s += (c / w) * (c / w);
    return w * (1.0 - s);
}

// W*gini(parent) - WL*gini(left) - WR*gini(right), unit weights.
inline double split_decrease(const Fixture& f, std::size_t feature, double threshold) {
    std::vector<double> all(f.n_classes, 0.0), left(f.n_classes, 0.0), right(f.n_classes, 0.0);
    for (std::size_t i = 0; i < f.rows; ++i) {
        const auto c = static_cast<std::size_t>(f.y[i]);
        all[c] += 1.0;
        (f.x[i * f.cols + feature] <= threshold ? left : right)[c] += 1.0;
    }
    return weighted_gini(all) - weighted_gini(left) - weighted_gini(right);
}

inline Split best_split(const Fixture& f) {
    Split best;
    for (std::size_t j = 0; j < f.cols; ++j) {
        std::vector<double> v;
        for (std::size_t i = 0; i < f.rows; ++i) v.push_back(f.x[i * f.cols + j]);
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        for (std::size_t k = 0; k + 1 < v.size(); ++k) {
            const double t = (v[k] + v[k + 1]) / 2.0;
            const double d = split_decrease(f, j, t);
            if (d > best.decrease) best = {static_cast<int>(j), t, d};
        }
    }
    return best;
}

// Small-integer features so ties and duplicate values are common.
inline Fixture random_fixture(std::mt19937_64& rng) {
    Fixture f;
    f.rows = std::uniform_int_distribution<std::size_t>(2, 64)(rng);
    f.cols = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
    f.n_classes = std::uniform_int_distribution<std::size_t>(2, 3)(rng);
    const int levels = std::uniform_int_distribution<int>(2, 12)(rng);
    std::uniform_int_distribution<int> value(0, levels - 1);
    std::uniform_int_distribution<int> label(0, static_cast<int>(f.n_classes) - 1);
    for (std::size_t i = 0; i < f.rows * f.cols; ++i) f.x.push_back(value(rng) * 0.5 - 1.0);
    for (std::size_t i = 0; i < f.rows; ++i) f.y.push_back(label(rng));
    return f;
}

// True when the fitted root split is as good as the exhaustive optimum.
// A leaf root is accepted only if no candidate split reduces impurity.
inline bool root_is_optimal(const Fixture& f, const attentrack::Tree& tree, double tol = 1e-9) {
    const Split best = best_split(f);
    const bool has_gain = best.feature >= 0 && best.decrease > tol;
    if (tree.is_leaf(0)) return !has_gain;
    if (!has_gain) return false;
    const double got = split_decrease(f, static_cast<std::size_t>(tree.feature[0]), tree.threshold[0]);
    return got >= best.decrease - tol;
}

// Two Gaussian blobs separated along every axis.
inline Fixture separable_blobs(std::size_t n, std::size_t d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.5);
    Fixture f;
    f.rows = n;
    f.cols = d;
    for (std::size_t i = 0; i < n; ++i) {
        const int c = static_cast<int>(i % 2);
        for (std::size_t j = 0; j < d; ++j) f.x.push_back((c == 0 ? -2.0 : 2.0) + noise(rng));
        f.y.push_back(c);
    }
    return f;
}

}  // namespace oracle
