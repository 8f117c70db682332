#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "attentrack/dataset.hpp"
#include "attentrack/eval.hpp"
#include "attentrack/features.hpp"

namespace attentrack::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitUsage = 2;

enum class StatsKind { chi2, tables, kappa, rtimes, lmm };
enum class Experiment { louo, personalization, incremental, ablation, group };

std::string_view to_string(StatsKind k);
std::string_view to_string(Experiment e);
StatsKind parse_stats_kind(std::string_view s);    // throws UsageError listing valid names
Experiment parse_experiment(std::string_view s);  // throws UsageError listing valid names

struct RunConfig {
    // inputs
    std::string data;
    std::string profiles;
    std::string taxonomy;
    std::string ratings;       // stats kappa: CSV, first two columns are the two coders
    std::string synth_config;  // synth: JSON, planted default when empty

    SchemeName scheme = SchemeName::FULL;
    LabelerName labeler = LabelerName::ATTENTRACK_I;
    LearnerKind model = LearnerKind::gbm;
    std::optional<int> trees;  // n_estimators override
    std::optional<std::uint64_t> seed;
    std::string out;
    unsigned threads = 1;

    // train / eval preprocessing
    std::size_t min_records = 80;
    bool drop_constant = true;

    std::string by = "activity";  // stats chi2 / tables grouping field
    std::string group;            // eval group: field=value
    std::vector<double> fractions = kDefaultFractions;
    bool reml = false;

    // synth
    std::optional<int> users;
    std::optional<int> records;
    DataFormat format = DataFormat::csv;

    std::uint64_t effective_seed() const { return seed.value_or(42); }
    ModelSpec model_spec() const;
    nlohmann::json to_json() const;
};

// Each command returns an exit code; messages go to `out`, errors to `err`.
int cmd_validate(const RunConfig& c, std::ostream& out, std::ostream& err);
int cmd_stats(const RunConfig& c, StatsKind which, std::ostream& out, std::ostream& err);
int cmd_train(const RunConfig& c, std::ostream& out, std::ostream& err);
int cmd_eval(const RunConfig& c, Experiment which, std::ostream& out, std::ostream& err);
int cmd_synth(const RunConfig& c, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

}  // namespace attentrack::cli
