#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <set>

#include <Eigen/Dense>

#include "attentrack/error.hpp"
#include "attentrack/kernels.hpp"
#include "attentrack/stats.hpp"

namespace attentrack {

struct LmmProblem::Solution {
    Eigen::Vector3d beta;
    Eigen::Matrix3d xtvx;  // X' H^-1 X
    double sigma2 = 0.0;
    double log_likelihood = 0.0;
    std::vector<double> mean_residual;  // per group
};

LmmProblem::LmmProblem(std::span<const double> y, std::span<const double> attention,
                       std::span<const std::string> groups) {
    if (y.size() != attention.size() || y.size() != groups.size())
        throw UsageError("mixed model inputs differ in length");
    std::map<std::string, std::vector<std::size_t>> members;
    std::set<double> distinct;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!std::isfinite(y[i]) || !std::isfinite(attention[i])) throw UsageError("non-finite mixed model input");
        members[groups[i]].push_back(i);
        distinct.insert(attention[i]);
    }
    if (members.size() < 2) throw UsageError("mixed model needs at least 2 groups");
    if (distinct.size() < 4) throw UsageError("mixed model needs at least 4 distinct attention values");
    group_start_.push_back(0);
    for (const auto& [id, rows] : members) {
        group_ids_.push_back(id);
        for (auto i : rows) {
            y_.push_back(y[i]);
            a_.push_back(attention[i]);
        }
        group_start_.push_back(y_.size());
    }
}

namespace {

LmmProblem from_dataset(const Dataset& d) {
    std::vector<double> y, a;
    std::vector<std::string> g;
    for (const auto& r : d.records) {
        y.push_back(static_cast<double>(r.response_time_s));
        a.push_back(r.attention);
        g.push_back(r.user_id);
    }
    return LmmProblem(y, a, g);
}

}  // namespace

LmmProblem::LmmProblem(const Dataset& d) : LmmProblem(from_dataset(d)) {}

LmmProblem::Solution LmmProblem::solve(double lambda, bool reml) const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw UsageError("variance ratio must be finite and >= 0");
    const std::size_t G = n_groups();
    const auto N = static_cast<double>(n_obs());
    Eigen::Matrix3d xtvx = Eigen::Matrix3d::Zero();
    Eigen::Vector3d xtvy = Eigen::Vector3d::Zero();
    double logdet_h = 0.0;
    for (std::size_t g = 0; g < G; ++g) {
        Eigen::Matrix3d xx = Eigen::Matrix3d::Zero();
        Eigen::Vector3d xy = Eigen::Vector3d::Zero(), s = Eigen::Vector3d::Zero();
        double t = 0.0;
        for (std::size_t i = group_start_[g]; i < group_start_[g + 1]; ++i) {
            const Eigen::Vector3d x(1.0, a_[i], a_[i] * a_[i]);
            xx += x * x.transpose();
            xy += x * y_[i];
            s += x;
            t += y_[i];
        }
        const double ng = static_cast<double>(group_start_[g + 1] - group_start_[g]);
        const double c = lambda / (1.0 + lambda * ng);
        xtvx += xx - c * s * s.transpose();
        xtvy += xy - c * s * t;
        logdet_h += std::log1p(lambda * ng);
    }
    Solution sol;
    sol.xtvx = xtvx;
    sol.beta = xtvx.ldlt().solve(xtvy);

    std::vector<double> r(n_obs());
    for (std::size_t i = 0; i < r.size(); ++i)
        r[i] = y_[i] - (sol.beta[0] + sol.beta[1] * a_[i] + sol.beta[2] * a_[i] * a_[i]);
    double rvr = 0.0;
    sol.mean_residual.resize(G);
    for (std::size_t g = 0; g < G; ++g) {
        const std::span<const double> rg(r.data() + group_start_[g], group_start_[g + 1] - group_start_[g]);
        double sum = 0.0;
        for (double v : rg) sum += v;
        const double ng = static_cast<double>(rg.size());
        rvr += kernels::dot(rg, rg) - lambda / (1.0 + lambda * ng) * sum * sum;
        sol.mean_residual[g] = sum / ng;
    }
    rvr = std::max(rvr, 0.0);
    const double p = 3.0;
    const double dof = reml ? N - p : N;
    sol.sigma2 = rvr / dof;
    const double log2pi = std::log(2.0 * std::numbers::pi);
    sol.log_likelihood = -0.5 * (dof * (log2pi + std::log(sol.sigma2)) + logdet_h + dof);
    if (reml) sol.log_likelihood -= 0.5 * std::log(xtvx.determinant());
    return sol;
}

double LmmProblem::log_likelihood(double lambda, bool reml) const { return solve(lambda, reml).log_likelihood; }

LmmFit LmmProblem::fit(const LmmOptions& o) const {
    LmmFit fit;
    fit.reml = o.reml;
    fit.n_obs = n_obs();
    double lambda = 0.0;
    if (o.fixed_lambda) {
        lambda = *o.fixed_lambda;
        fit.converged = true;
    } else {
        // Coarse grid over log lambda, then golden section around the best point.
        constexpr double lo = -20.0, hi = 15.0, step = 0.5;
        const auto f = [&](double theta) { return log_likelihood(std::exp(theta), o.reml); };
        const int points = static_cast<int>((hi - lo) / step) + 1;
        int best = 0;
        double best_val = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < points; ++k) {
            const double v = f(lo + step * k);
            if (v > best_val) {
                best_val = v;
                best = k;
            }
        }
        if (best == 0 && log_likelihood(0.0, o.reml) >= best_val) {
            lambda = 0.0;  // boundary: no detectable group variance
            fit.converged = true;
        } else {
            double a = lo + step * std::max(best - 1, 0);
            double b = lo + step * std::min(best + 1, points - 1);
            const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
            double c = b - invphi * (b - a), d = a + invphi * (b - a);
            double fc = f(c), fd = f(d);
            int it = 0;
            while (b - a >= o.tolerance) {
                if (++it > o.max_iterations)
                    throw ConvergenceError("mixed model: log-lambda search did not converge in " +
                                           std::to_string(o.max_iterations) + " iterations (bracket [" +
                                           std::to_string(a) + ", " + std::to_string(b) + "])");
                if (fc >= fd) {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - invphi * (b - a);
                    fc = f(c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + invphi * (b - a);
                    fd = f(d);
                }
            }
            fit.iterations = it;
            fit.converged = true;
            lambda = std::exp((a + b) / 2.0);
        }
    }

    const auto sol = solve(lambda, o.reml);
    fit.lambda = lambda;
    fit.residual_var = sol.sigma2;
    fit.group_var = lambda * sol.sigma2;
    fit.log_likelihood = sol.log_likelihood;
    const Eigen::Matrix3d cov = sol.sigma2 * sol.xtvx.inverse();
    const std::array<const char*, 3> names = {"intercept", "attention", "attention^2"};
    for (int k = 0; k < 3; ++k) {
        LmmCoefficient c;
        c.name = names[static_cast<std::size_t>(k)];
        c.estimate = sol.beta[k];
        c.std_error = std::sqrt(std::max(cov(k, k), 0.0));
        c.z = c.estimate / c.std_error;
        c.p = std::erfc(std::abs(c.z) / std::numbers::sqrt2);
        c.ci_low = c.estimate - 1.96 * c.std_error;
        c.ci_high = c.estimate + 1.96 * c.std_error;
        fit.fixed.push_back(c);
    }
    for (std::size_t g = 0; g < n_groups(); ++g) {
        const double ng = static_cast<double>(group_start_[g + 1] - group_start_[g]);
        fit.blups.emplace_back(group_ids_[g], lambda * ng / (1.0 + lambda * ng) * sol.mean_residual[g]);
    }
    return fit;
}

nlohmann::json LmmFit::to_json() const {
    nlohmann::json j;
    j["model"] = "response_time_s ~ 1 + attention + attention^2 + (1 | user_id)";
    j["method"] = reml ? "REML" : "ML";
    j["n_obs"] = n_obs;
    j["n_groups"] = blups.size();
    j["fixed_effects"] = nlohmann::json::array();
    for (const auto& c : fixed)
        j["fixed_effects"].push_back({{"name", c.name},
                                      {"coef", c.estimate},
                                      {"std_err", c.std_error},
                                      {"z", c.z},
                                      {"p", c.p},
                                      {"ci_low", c.ci_low},
                                      {"ci_high", c.ci_high}});
    j["group_var"] = group_var;
    j["residual_var"] = residual_var;
    j["lambda"] = lambda;
    j["log_likelihood"] = log_likelihood;
    j["converged"] = converged;
    j["iterations"] = iterations;
    nlohmann::json re = nlohmann::json::object();
    for (const auto& [id, v] : blups) re[id] = v;
    j["random_effects"] = re;
    return j;
}

}  // namespace attentrack
