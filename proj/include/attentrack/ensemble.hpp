#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "attentrack/tree.hpp"

namespace attentrack {

enum class ClassWeight { none, balanced };

// Defaults follow the reference RandomForestClassifier configuration.
struct ForestParams {
    int n_estimators = 100;
    Criterion criterion = Criterion::gini;
    std::optional<int> max_depth;
    MaxFeatures max_features = MaxFeatures::sqrt;
    ClassWeight class_weight = ClassWeight::balanced;
    bool bootstrap = true;
    int min_samples_split = 2;
    int min_samples_leaf = 1;
    std::uint64_t seed = 42;
    unsigned threads = 1;  // trees fitted concurrently; results do not depend on it
};

// Defaults follow the reference GradientBoostingClassifier configuration.
struct GbmParams {
    int n_estimators = 100;
    double learning_rate = 0.1;
    int max_depth = 3;
    Criterion criterion = Criterion::friedman_mse;
    double subsample = 1.0;
    int min_samples_split = 2;
    int min_samples_leaf = 1;
    std::uint64_t seed = 42;
};

enum class ModelKind { forest, gbm };

// n / (k * n_c) for each class c present in y (k = number of present classes);
// 0 for absent classes.
std::vector<double> balanced_class_weights(std::span<const int> y, std::size_t n_classes);

class EnsembleModel {
public:
    static constexpr const char* kSchema = "attentrack.ensemble/v1";

    ModelKind kind() const noexcept { return kind_; }
    const std::vector<std::string>& class_names() const noexcept { return class_names_; }
    std::size_t n_classes() const noexcept { return class_names_.size(); }
    std::size_t n_features() const noexcept { return n_features_; }
    const std::vector<Tree>& trees() const noexcept { return trees_; }
    const std::variant<ForestParams, GbmParams>& params() const noexcept { return params_; }
    // Global class index of each internal (trained) class.
    const std::vector<int>& trained_classes() const noexcept { return trained_classes_; }
    // GBM only: prior-only raw scores and per-stage training deviance (index 0 = prior).
    const std::vector<double>& init_scores() const noexcept { return init_scores_; }
    const std::vector<double>& train_deviance() const noexcept { return train_deviance_; }

    // Probabilities over all n_classes(); classes unseen in training get 0.
    std::vector<double> predict_proba(std::span<const double> x) const;
    // argmax of predict_proba, ties to the lowest class index.
    int predict(std::span<const double> x) const;
    // Row-major n x n_classes.
    std::vector<double> predict_proba(MatrixView x) const;
    // GBM raw additive scores (one per internal class; one total for binary).
    std::vector<double> raw_scores(std::span<const double> x) const;

    nlohmann::json to_json() const;
    static EnsembleModel from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static EnsembleModel load(const std::string& path);

private:
    friend EnsembleModel fit_forest(MatrixView, std::span<const int>, const std::vector<std::string>&,
                                    const ForestParams&, std::span<const std::uint64_t>);
    friend EnsembleModel fit_gbm(MatrixView, std::span<const int>, const std::vector<std::string>&,
                                 const GbmParams&);

    void check_dimension(std::size_t d) const;

    ModelKind kind_ = ModelKind::forest;
    std::vector<std::string> class_names_;
    std::size_t n_features_ = 0;
    std::vector<Tree> trees_;
    std::variant<ForestParams, GbmParams> params_;
    std::vector<int> trained_classes_;
    std::vector<double> init_scores_;
    std::vector<double> train_deviance_;
};

// `class_names` fixes the label alphabet; y holds indices into it. At least two
// classes must be present. When `row_keys` is given, rows are first put in
// ascending key order so bootstrap draws and tie-breaks do not depend on the
// caller's row order.
EnsembleModel fit_forest(MatrixView x, std::span<const int> y, const std::vector<std::string>& class_names,
                         const ForestParams& params, std::span<const std::uint64_t> row_keys = {});

EnsembleModel fit_gbm(MatrixView x, std::span<const int> y, const std::vector<std::string>& class_names,
                      const GbmParams& params);

// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> scores);

}  // namespace attentrack
