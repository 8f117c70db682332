#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attentrack/dataset.hpp"
#include "attentrack/ensemble.hpp"
#include "attentrack/features.hpp"
#include "attentrack/metrics.hpp"

namespace attentrack {

// `majority` predicts the training class priors; it is the reference learner for
// harness tests and the fallback when a training set holds a single class.
enum class LearnerKind { forest, gbm, majority };

std::string_view to_string(LearnerKind k);
// Accepts the CLI spellings rf | gb | majority.
LearnerKind parse_learner(std::string_view s);

struct ModelSpec {
    LearnerKind kind = LearnerKind::gbm;
    ForestParams forest;
    GbmParams gbm;
};

// A fitted learner of any kind.
class Predictor {
public:
    static Predictor fit(const ModelSpec& spec, MatrixView x, std::span<const int> y,
                         const std::vector<std::string>& class_names, std::uint64_t seed,
                         std::span<const std::uint64_t> row_keys = {});

    std::vector<double> predict_proba(std::span<const double> x) const;
    // True when the learner fell back to class priors (single-class training set).
    bool is_fallback() const noexcept { return fallback_; }
    const std::optional<EnsembleModel>& ensemble() const noexcept { return ensemble_; }

private:
    std::optional<EnsembleModel> ensemble_;
    std::vector<double> prior_;
    bool fallback_ = false;
};

struct EvalConfig {
    ModelSpec model;
    SchemeName scheme = SchemeName::FULL;
    LabelerName labeler = LabelerName::ATTENTRACK_I;
    EncodingOptions encoding;
    std::uint64_t seed = 42;
    unsigned threads = 1;  // folds evaluated concurrently; results do not depend on it
};

// Seed of the fold that holds out `user_id`.
std::uint64_t fold_seed(std::uint64_t run_seed, std::string_view user_id);

struct FoldResult {
    std::string user_id;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    bool fallback = false;
    MetricSet model;
    MetricSet baseline;  // random predictions on the same test rows
};

// Mean and population SD of each metric over folds. Optional metrics are
// averaged over the folds where they are defined; `*_n` counts those folds.
struct MetricSummary {
    MetricSet mean;
    MetricSet sd;
    std::size_t folds = 0;
    std::size_t auc_n = 0;
};

MetricSummary summarize(std::span<const MetricSet> sets);

struct LouoReport {
    EvalConfig config;
    std::vector<FoldResult> folds;  // ordered by user id
    MetricSummary model;
    MetricSummary baseline;
};

LouoReport run_louo(const Dataset& d, const EvalConfig& config);

struct PersonalFold {
    std::string user_id;
    std::size_t n_personal_train = 0;
    std::size_t n_general_train = 0;
    std::size_t n_test = 0;
    std::int64_t last_train_time = 0;  // epoch seconds
    std::int64_t first_test_time = 0;
    bool personal_fallback = false;
    MetricSet personal;
    MetricSet general;
};

struct PersonalizationReport {
    EvalConfig config;
    std::vector<PersonalFold> folds;
    std::vector<std::string> notices;  // skipped users, with the reason
    MetricSummary personal;
    MetricSummary general;
};

inline constexpr std::size_t kMinPersonalRecords = 10;
inline constexpr double kPersonalTrainShare = 0.7;

PersonalizationReport run_personalization(const Dataset& d, const EvalConfig& config);

inline const std::vector<double> kDefaultFractions = {0.0, 0.125, 0.25, 0.5, 0.75, 1.0};
inline constexpr double kIncrementalPoolShare = 0.8;

struct IncrementalPoint {
    std::string user_id;
    double fraction = 0.0;
    std::size_t n_own_train = 0;
    std::size_t n_test = 0;
    MetricSet metrics;
};

struct IncrementalReport {
    EvalConfig config;
    std::vector<double> fractions;
    std::vector<IncrementalPoint> points;  // user-major, fractions in the given order
    std::vector<std::string> notices;
    std::vector<MetricSummary> curve;      // one per fraction
};

IncrementalReport run_incremental(const Dataset& d, const EvalConfig& config,
                                  const std::vector<double>& fractions = kDefaultFractions);

struct AblationReport {
    std::vector<LouoReport> runs;  // CONTEXT_ONLY, DISTRACTION_ONLY, FULL
};

// config.scheme is ignored.
AblationReport run_ablation(const Dataset& d, const EvalConfig& config);

struct GroupFold {
    std::string user_id;
    std::size_t n_group_train = 0;
    std::size_t n_general_train = 0;
    std::size_t n_test = 0;
    MetricSet group;
    MetricSet general;
};

struct GroupReport {
    EvalConfig config;
    std::string group_name;
    std::vector<GroupFold> folds;
    MetricSummary group;
    MetricSummary general;
};

using ProfilePredicate = std::function<bool(const UserProfile&)>;

// Parses "field=value" over profile fields gender, occupation, phone_brand, education.
ProfilePredicate parse_group(std::string_view expr);

GroupReport run_group_model(const Dataset& d, const ProfilePredicate& in_group, const EvalConfig& config,
                            std::string group_name = "group");

// Reports. Numbers use fixed formatting so files are byte-stable.
void write_louo_csv(std::ostream& out, const LouoReport& r);
void write_louo_markdown(std::ostream& out, const LouoReport& r);
void write_personalization_csv(std::ostream& out, const PersonalizationReport& r);
void write_personalization_markdown(std::ostream& out, const PersonalizationReport& r);
void write_incremental_csv(std::ostream& out, const IncrementalReport& r);
void write_incremental_markdown(std::ostream& out, const IncrementalReport& r);
void write_ablation_csv(std::ostream& out, const AblationReport& r);
void write_ablation_markdown(std::ostream& out, const AblationReport& r);
void write_group_csv(std::ostream& out, const GroupReport& r);
void write_group_markdown(std::ostream& out, const GroupReport& r);

}  // namespace attentrack
