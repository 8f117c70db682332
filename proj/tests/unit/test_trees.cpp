#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "split_oracle.hpp"

#include "attentrack/error.hpp"
#include "attentrack/tree.hpp"

using namespace attentrack;

TEST_CASE("pure split on a separating feature") {
    const std::vector<double> x = {5, 0, 6, 0, 1, 0, 2, 0};  // feature 1 is constant
    const std::vector<int> y = {1, 1, 0, 0};
    const Tree t = fit_tree({x, 4, 2}, y, {}, TreeParams{});
    REQUIRE_FALSE(t.is_leaf(0));
    CHECK(t.feature[0] == 0);
    CHECK(t.threshold[0] == doctest::Approx(3.5));
    for (int child : {t.left[0], t.right[0]}) {
        REQUIRE(t.is_leaf(static_cast<std::size_t>(child)));
        const auto v = t.node_value(static_cast<std::size_t>(child));
        CHECK(std::max(v[0], v[1]) == 1.0);
    }
}

TEST_CASE("12-point fixture matches exhaustive search") {
    oracle::Fixture f;
    f.rows = 12;
    f.cols = 2;
    f.x = {1, 7, 2, 3, 3, 8, 4, 1, 5, 9, 6, 2, 7, 6, 8, 4, 9, 5, 10, 2, 11, 7, 12, 1};
    f.y = {0, 1, 0, 1, 0, 1, 0, 1, 1, 0, 1, 0};
    const auto best = oracle::best_split(f);
    const Tree t = fit_tree(f.view(), f.y, {}, TreeParams{});
    CHECK(t.feature[0] == best.feature);
    CHECK(t.threshold[0] == best.threshold);
    CHECK(oracle::root_is_optimal(f, t));
}

TEST_CASE("root split is optimal on random fixtures") {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 300; ++rep) {
        const auto f = oracle::random_fixture(rng);
        const Tree t = fit_tree(f.view(), f.y, {}, TreeParams{}, f.n_classes);
        INFO("rep " << rep);
        CHECK(oracle::root_is_optimal(f, t));
    }
}

TEST_CASE("ties go to the lowest feature then lowest threshold") {
    // Both features separate identically; feature 0 must win.
    const std::vector<double> x = {0, 0, 1, 1, 2, 2, 3, 3};
    const std::vector<int> y = {0, 0, 1, 1};
    const Tree t = fit_tree({x, 4, 2}, y, {}, TreeParams{});
    CHECK(t.feature[0] == 0);
    // Symmetric labels: splits at 0.5 and 2.5 have equal gain.
    const std::vector<double> x2 = {0, 1, 2, 3};
    const std::vector<int> y2 = {0, 1, 1, 0};
    const Tree t2 = fit_tree({x2, 4, 1}, y2, {}, TreeParams{});
    CHECK(t2.threshold[0] == 0.5);
}

TEST_CASE("single class gives a depth-0 leaf") {
    const std::vector<double> x = {1, 2, 3};
    const std::vector<int> y = {1, 1, 1};
    const Tree t = fit_tree({x, 3, 1}, y, {}, TreeParams{}, 2);
    CHECK(t.node_count() == 1);
    CHECK(t.depth() == 0);
    CHECK(t.node_value(0)[1] == 1.0);
}

TEST_CASE("constant features with an impure node give a leaf") {
    const std::vector<double> x = {1, 1, 1, 1};
    const std::vector<int> y = {0, 1, 0, 1};
    const Tree t = fit_tree({x, 4, 1}, y, {}, TreeParams{});
    CHECK(t.node_count() == 1);
    CHECK(t.node_value(0)[0] == doctest::Approx(0.5));
}

TEST_CASE("input errors") {
    const std::vector<double> x = {1, 2, 3};
    const std::vector<int> y = {0, 1};
    CHECK_THROWS_AS(fit_tree({x, 3, 1}, y, {}, TreeParams{}), UsageError);
    const std::vector<int> y3 = {0, 1, 0};
    const std::vector<double> w = {1, 0, 1};
    CHECK_THROWS_AS(fit_tree({x, 3, 1}, y3, w, TreeParams{}), UsageError);
    CHECK_THROWS(MatrixView(x, 2, 2));
    TreeParams reg;
    reg.criterion = Criterion::friedman_mse;
    CHECK_THROWS_AS(fit_tree({x, 3, 1}, y3, {}, reg), UsageError);
}

TEST_CASE("stopping rules") {
    std::mt19937_64 rng(3);
    const auto f = oracle::separable_blobs(60, 3, 11);
    TreeParams p;
    p.max_depth = 1;
    CHECK(fit_tree(f.view(), f.y, {}, p).depth() <= 1);
    p.max_depth.reset();
    p.min_samples_leaf = 25;
    const Tree t = fit_tree(f.view(), f.y, {}, p);
    for (std::size_t n = 0; n < t.node_count(); ++n) CHECK(t.node_weight[n] >= 25.0);
    p.min_samples_leaf = 1;
    p.min_samples_split = 100;
    CHECK(fit_tree(f.view(), f.y, {}, p).node_count() == 1);
}

TEST_CASE("weighted leaves hold weighted class frequencies") {
    const std::vector<double> x = {1, 1, 1};
    const std::vector<int> y = {0, 1, 1};
    const std::vector<double> w = {2.0, 1.0, 1.0};
    const Tree t = fit_tree({x, 3, 1}, y, w, TreeParams{});
    CHECK(t.node_value(0)[0] == doctest::Approx(0.5));
}

TEST_CASE("regression tree leaves hold weighted means") {
    const std::vector<double> x = {0, 1, 2, 3};
    const std::vector<double> y = {1, 1, 5, 7};
    TreeParams p;
    p.criterion = Criterion::friedman_mse;
    p.max_depth = 1;
    const Tree t = fit_regression_tree({x, 4, 1}, y, {}, p);
    REQUIRE(t.node_count() == 3);
    CHECK(t.threshold[0] == 1.5);
    CHECK(t.node_value(static_cast<std::size_t>(t.left[0]))[0] == doctest::Approx(1.0));
    CHECK(t.node_value(static_cast<std::size_t>(t.right[0]))[0] == doctest::Approx(6.0));
}

TEST_CASE("feature subsampling count") {
    CHECK(features_per_node(MaxFeatures::sqrt, 74) == 9);
    CHECK(features_per_node(MaxFeatures::sqrt, 1) == 1);
    CHECK(features_per_node(MaxFeatures::sqrt, 16) == 4);
    CHECK(features_per_node(MaxFeatures::all, 5) == 5);
}

TEST_CASE("tree JSON round trip and validation") {
    const auto f = oracle::separable_blobs(40, 2, 5);
    const Tree t = fit_tree(f.view(), f.y, {}, TreeParams{});
    const Tree u = Tree::from_json(t.to_json());
    CHECK(u.feature == t.feature);
    CHECK(u.threshold == t.threshold);
    CHECK(u.value == t.value);
    auto bad = t.to_json();
    bad["left"] = nlohmann::json::array();
    CHECK_THROWS(Tree::from_json(bad));
}

TEST_CASE("every internal threshold is finite and children follow parents") {
    std::mt19937_64 rng(19);
    for (int rep = 0; rep < 30; ++rep) {
        const auto f = oracle::random_fixture(rng);
        const Tree t = fit_tree(f.view(), f.y, {}, TreeParams{}, f.n_classes);
        for (std::size_t n = 0; n < t.node_count(); ++n) {
            if (t.is_leaf(n)) {
                const auto v = t.node_value(n);
                CHECK(std::accumulate(v.begin(), v.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
                continue;
            }
            CHECK(std::isfinite(t.threshold[n]));
            CHECK(t.left[n] > static_cast<int>(n));
            CHECK(t.right[n] > t.left[n]);
        }
    }
}

namespace {

// Largest weighted SSE decrease over all midpoint splits of `rows`.
double best_sse_decrease(const std::vector<double>& x, std::size_t cols, const std::vector<double>& y,
                         const std::vector<double>& w, const std::vector<std::size_t>& rows) {
    double best = 0.0;
    for (std::size_t f = 0; f < cols; ++f) {
        std::vector<double> v;
        for (auto r : rows) v.push_back(x[r * cols + f]);
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        for (std::size_t k = 0; k + 1 < v.size(); ++k) {
            const double t = (v[k] + v[k + 1]) / 2.0;
            double lw = 0, ls = 0, rw = 0, rs = 0;
            for (auto r : rows) {
                if (x[r * cols + f] <= t) {
                    lw += w[r];
                    ls += w[r] * y[r];
                } else {
                    rw += w[r];
                    rs += w[r] * y[r];
                }
            }
            if (lw == 0 || rw == 0) continue;
            best = std::max(best, ls * ls / lw + rs * rs / rw - (ls + rs) * (ls + rs) / (lw + rw));
        }
    }
    return best;
}

}  // namespace

TEST_CASE("regression splits are optimal with binary and high-cardinality columns") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 60; ++rep) {
        INFO("rep=" << rep);
        const std::size_t n = 80 + rng() % 120;
        const std::size_t cols = 6;
        std::vector<double> x(n * cols), y(n), w(n, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            x[i * cols + 0] = static_cast<double>(rng() & 1);
            x[i * cols + 1] = static_cast<double>(rng() % 3 == 0);
            x[i * cols + 2] = static_cast<double>(rng() % 400) / 4.0;  // usually > 64 distinct
            x[i * cols + 3] = static_cast<double>(rng() % 5);
            x[i * cols + 4] = static_cast<double>(rng() & 1);
            x[i * cols + 5] = static_cast<double>(rng() % 7 == 0);
            y[i] = static_cast<double>(static_cast<int>(rng() % 9) - 4) + x[i * cols + 0];
        }
        const bool weighted = rep % 2 == 1;
        if (weighted)
            for (double& v : w) v = static_cast<double>(rng() % 3);
        TreeParams p;
        p.criterion = Criterion::friedman_mse;
        p.max_depth = 3;
        p.max_features = MaxFeatures::all;
        const Tree t = fit_regression_tree({x, n, cols}, y, weighted ? std::span<const double>(w) : std::span<const double>(), p);
        double root_weight = 0;
        for (double v : w) root_weight += v;
        // Walk every internal node with the rows that reach it.
        std::vector<std::pair<int, std::vector<std::size_t>>> stack;
        std::vector<std::size_t> all;
        for (std::size_t i = 0; i < n; ++i)
            if (w[i] > 0) all.push_back(i);
        stack.emplace_back(0, all);
        while (!stack.empty()) {
            auto [node, rows] = stack.back();
            stack.pop_back();
            if (t.feature[node] < 0) continue;
            const double expect = best_sse_decrease(x, cols, y, w, rows);
            CHECK(t.improvement[node] * root_weight == doctest::Approx(expect).epsilon(1e-9));
            std::vector<std::size_t> l, r;
            for (auto i : rows) (x[i * cols + static_cast<std::size_t>(t.feature[node])] <= t.threshold[node] ? l : r).push_back(i);
            stack.emplace_back(t.left[node], l);
            stack.emplace_back(t.right[node], r);
        }
    }
}
