#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "attentrack/dataset.hpp"

namespace attentrack {

struct ContingencyTable {
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    std::vector<std::int64_t> counts;  // row-major

    std::size_t rows() const noexcept { return row_labels.size(); }
    std::size_t cols() const noexcept { return col_labels.size(); }
    std::int64_t at(std::size_t r, std::size_t c) const { return counts[r * cols() + c]; }
    std::int64_t total() const;
    ContingencyTable transpose() const;
};

struct ChiSquareResult {
    double chi2 = 0.0;
    int df = 0;
    double p = 1.0;
    std::int64_t n = 0;
};

// Pearson test of independence. Throws UsageError on a zero row or column
// margin (naming it), a table smaller than 2x2 or negative counts.
ChiSquareResult chi_square(const ContingencyTable& t);

// Categorical record/profile fields usable for grouping.
enum class GroupField {
    activity,
    time_of_day,
    weekday,
    day_of_week,
    foreground_category,
    notif_category,
    response_behavior,
    coarse_behavior,
    gender,
    occupation,
};

GroupField parse_group_field(std::string_view s);  // throws UsageError listing valid names
std::string_view to_string(GroupField f);

// Group levels (declared order, unobserved levels omitted) x attention 1-5.
// Profile fields need profiles for every user.
ContingencyTable crosstab(const Dataset& d, GroupField rows);

struct GroupStats {
    std::string group;
    std::size_t total = 0;
    double proportion = 0.0;                 // share of all records
    std::array<double, 5> level_share{};     // share of the group's records at attention 1..5
    double mean = 0.0;
    double sd = 0.0;                         // population SD
    double median = 0.0;
};

std::vector<GroupStats> describe_by_group(const Dataset& d, GroupField group_by);

// Attention statistics of an arbitrary list of levels.
GroupStats describe_levels(std::span<const int> levels);

// Cohen's kappa over the union of both label alphabets. 1 when p_e = 1.
double cohens_kappa(std::span<const std::string> a, std::span<const std::string> b);

struct Quartiles {
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
};

// Median-of-halves (Tukey hinges without the median in either half).
Quartiles tukey_quartiles(std::vector<double> values);

struct ResponseTimeRow {
    int attention = 0;
    std::size_t n = 0;
    double mean = 0.0;
    Quartiles q;
};

// One row per attention level present in the data.
std::vector<ResponseTimeRow> response_time_table(const Dataset& d);

// Random-intercept linear mixed model
//   y = b0 + b1*A + b2*A^2 + u_group + e,  u ~ N(0, s_u^2), e ~ N(0, s^2)
// fitted by profiling b and s^2 out of the likelihood and maximizing over log(s_u^2 / s^2).
struct LmmOptions {
    bool reml = false;
    std::optional<double> fixed_lambda;  // pin s_u^2 / s^2 instead of estimating it
    int max_iterations = 200;
    double tolerance = 1e-8;  // on log lambda
};

struct LmmCoefficient {
    std::string name;
    double estimate = 0.0;
    double std_error = 0.0;
    double z = 0.0;
    double p = 1.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

struct LmmFit {
    std::vector<LmmCoefficient> fixed;  // intercept, attention, attention^2
    double group_var = 0.0;
    double residual_var = 0.0;
    double lambda = 0.0;
    double log_likelihood = 0.0;
    bool converged = false;
    bool reml = false;
    int iterations = 0;
    std::size_t n_obs = 0;
    std::vector<std::pair<std::string, double>> blups;  // sorted by group id

    nlohmann::json to_json() const;
};

class LmmProblem {
public:
    // Needs >= 2 groups and >= 4 distinct attention values.
    LmmProblem(std::span<const double> y, std::span<const double> attention, std::span<const std::string> groups);
    explicit LmmProblem(const Dataset& d);  // response_time_s on attention, grouped by user

    // Profiled (restricted) log-likelihood at variance ratio lambda >= 0.
    double log_likelihood(double lambda, bool reml = false) const;
    LmmFit fit(const LmmOptions& options = {}) const;

    std::size_t n_obs() const noexcept { return y_.size(); }
    std::size_t n_groups() const noexcept { return group_ids_.size(); }

private:
    struct Solution;
    Solution solve(double lambda, bool reml) const;

    std::vector<std::string> group_ids_;   // sorted
    std::vector<std::size_t> group_start_;  // observations are stored grouped; size n_groups + 1
    std::vector<double> y_;
    std::vector<double> a_;
};

inline LmmFit fit_lmm(const Dataset& d, const LmmOptions& options = {}) { return LmmProblem(d).fit(options); }

// Reports.
void write_chi_square_markdown(std::ostream& out, const ContingencyTable& t, const ChiSquareResult& r);
void write_chi_square_csv(std::ostream& out, const ContingencyTable& t, const ChiSquareResult& r);
void write_group_table_csv(std::ostream& out, const std::vector<GroupStats>& rows);
void write_group_table_markdown(std::ostream& out, std::string_view field, const std::vector<GroupStats>& rows);
void write_response_time_csv(std::ostream& out, const std::vector<ResponseTimeRow>& rows);
void write_response_time_markdown(std::ostream& out, const std::vector<ResponseTimeRow>& rows);
void write_lmm_markdown(std::ostream& out, const LmmFit& fit);

}  // namespace attentrack
