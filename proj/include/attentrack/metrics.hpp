#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace attentrack {

// Classification metrics for one evaluation fold. Class 1 is the positive class
// for binary problems. Macro and weighted averages run over the classes present
// in y_true or y_pred; a class with no predictions (or no support) scores 0.
struct MetricSet {
    std::size_t support = 0;
    double accuracy = 0.0;
    std::optional<double> precision_pos, recall_pos, f1_pos;  // binary only
    double precision_macro = 0.0, recall_macro = 0.0, f1_macro = 0.0;
    double precision_weighted = 0.0, recall_weighted = 0.0, f1_weighted = 0.0;
    std::optional<double> auc;  // absent when undefined (single-class y_true)

    friend bool operator==(const MetricSet&, const MetricSet&) = default;
};

// `y_score` is row-major n x n_classes (per-class probabilities).
MetricSet compute_metrics(std::span<const int> y_true, std::span<const int> y_pred, std::span<const double> y_score,
                          std::size_t n_classes);

// Mann-Whitney ROC-AUC with midranks; `positive` flags the positive samples.
// Absent when either group is empty.
std::optional<double> roc_auc(std::span<const char> positive, std::span<const double> score);

struct RandomPrediction {
    std::vector<int> y_pred;
    std::vector<double> y_score;  // row-major n x n_classes
};

// Uniform random class per sample and scores drawn uniformly from the simplex.
RandomPrediction random_baseline(std::span<const int> y_true, std::size_t n_classes, std::uint64_t seed);

}  // namespace attentrack
