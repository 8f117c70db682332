#include <cstdio>
#include <ostream>

#include "attentrack/stats.hpp"

namespace attentrack {
namespace {

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

}  // namespace

void write_chi_square_csv(std::ostream& out, const ContingencyTable& t, const ChiSquareResult& r) {
    out << "group";
    for (const auto& c : t.col_labels) out << ",attention_" << c;
    out << '\n';
    for (std::size_t i = 0; i < t.rows(); ++i) {
        out << t.row_labels[i];
        for (std::size_t j = 0; j < t.cols(); ++j) out << ',' << t.at(i, j);
        out << '\n';
    }
    out << "# chi2=" << fixed(r.chi2, 4) << ",df=" << r.df << ",n=" << r.n << ",p=" << sci(r.p) << '\n';
}

void write_chi_square_markdown(std::ostream& out, const ContingencyTable& t, const ChiSquareResult& r) {
    out << "| Group |";
    for (const auto& c : t.col_labels) out << " A=" << c << " |";
    out << "\n|---|";
    for (std::size_t j = 0; j < t.cols(); ++j) out << "---|";
    out << '\n';
    for (std::size_t i = 0; i < t.rows(); ++i) {
        out << "| " << t.row_labels[i] << " |";
        for (std::size_t j = 0; j < t.cols(); ++j) out << ' ' << t.at(i, j) << " |";
        out << '\n';
    }
    out << "\nχ²(" << r.df << ", N = " << r.n << ") = " << fixed(r.chi2, 2) << ", p = " << sci(r.p) << "\n";
}

void write_group_table_csv(std::ostream& out, const std::vector<GroupStats>& rows) {
    out << "group,total,proportion,level_1,level_2,level_3,level_4,level_5,mean,sd,median\n";
    for (const auto& r : rows) {
        out << r.group << ',' << r.total << ',' << fixed(r.proportion, 6);
        for (double s : r.level_share) out << ',' << fixed(s, 6);
        out << ',' << fixed(r.mean, 6) << ',' << fixed(r.sd, 6) << ',' << fixed(r.median, 2) << '\n';
    }
}

void write_group_table_markdown(std::ostream& out, std::string_view field, const std::vector<GroupStats>& rows) {
    out << "| " << field << " | Total | Prop. | 1 | 2 | 3 | 4 | 5 | Mean | SD | Median |\n";
    out << "|---|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : rows) {
        out << "| " << r.group << " | " << r.total << " | " << fixed(100.0 * r.proportion, 2) << "% |";
        for (double s : r.level_share) out << ' ' << fixed(100.0 * s, 2) << "% |";
        out << ' ' << fixed(r.mean, 2) << " | " << fixed(r.sd, 2) << " | " << fixed(r.median, 2) << " |\n";
    }
}

void write_response_time_csv(std::ostream& out, const std::vector<ResponseTimeRow>& rows) {
    out << "attention,n,mean,median,q1,q3\n";
    for (const auto& r : rows)
        out << r.attention << ',' << r.n << ',' << fixed(r.mean, 4) << ',' << fixed(r.q.median, 2) << ','
            << fixed(r.q.q1, 2) << ',' << fixed(r.q.q3, 2) << '\n';
}

void write_response_time_markdown(std::ostream& out, const std::vector<ResponseTimeRow>& rows) {
    out << "| Attention | N | Mean | Med. | Q1 | Q3 |\n|---|---|---|---|---|---|\n";
    for (const auto& r : rows)
        out << "| " << r.attention << " | " << r.n << " | " << fixed(r.mean, 2) << " | " << fixed(r.q.median, 2)
            << " | " << fixed(r.q.q1, 2) << " | " << fixed(r.q.q3, 2) << " |\n";
}

void write_lmm_markdown(std::ostream& out, const LmmFit& fit) {
    out << "Random-intercept model, " << (fit.reml ? "REML" : "ML") << ", " << fit.n_obs << " observations, "
        << fit.blups.size() << " users.\n\n";
    out << "| Term | Coef. | Std.Err. | z | P>\\|z\\| | [0.025 | 0.975] |\n|---|---|---|---|---|---|---|\n";
    for (const auto& c : fit.fixed)
        out << "| " << c.name << " | " << fixed(c.estimate, 3) << " | " << fixed(c.std_error, 3) << " | "
            << fixed(c.z, 3) << " | " << fixed(c.p, 3) << " | " << fixed(c.ci_low, 3) << " | " << fixed(c.ci_high, 3)
            << " |\n";
    out << "| Group Var | " << fixed(fit.group_var, 3) << " | | | | | |\n";
    out << "\nResidual variance " << fixed(fit.residual_var, 3) << ", log-likelihood " << fixed(fit.log_likelihood, 3)
        << ", converged: " << (fit.converged ? "yes" : "no") << ".\n";
}

}  // namespace attentrack
