#include "attentrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "attentrack/error.hpp"
#include "attentrack/rng.hpp"

namespace attentrack {
namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }
double f1(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

std::optional<double> roc_auc(std::span<const char> positive, std::span<const double> score) {
    if (positive.size() != score.size()) throw UsageError("roc_auc: length mismatch");
    const std::size_t n = score.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return score[a] < score[b]; });
    double n_pos = 0.0, rank_sum = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && score[order[j]] == score[order[i]]) ++j;
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (positive[order[k]]) {
                rank_sum += midrank;
                n_pos += 1.0;
            }
        i = j;
    }
    const double n_neg = static_cast<double>(n) - n_pos;
    if (n_pos == 0.0 || n_neg == 0.0) return std::nullopt;
    return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

MetricSet compute_metrics(std::span<const int> y_true, std::span<const int> y_pred, std::span<const double> y_score,
                          std::size_t n_classes) {
    const std::size_t n = y_true.size();
    if (y_pred.size() != n) throw UsageError("compute_metrics: y_true and y_pred lengths differ");
    if (y_score.size() != n * n_classes) throw UsageError("compute_metrics: y_score must be n x n_classes");
    if (n == 0) throw UsageError("compute_metrics: no samples");
    if (n_classes < 2) throw UsageError("compute_metrics: need at least two classes");
    const auto check = [&](int c) {
        if (c < 0 || static_cast<std::size_t>(c) >= n_classes) throw UsageError("compute_metrics: label out of range");
    };

    std::vector<double> tp(n_classes, 0.0), support(n_classes, 0.0), predicted(n_classes, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        check(y_true[i]);
        check(y_pred[i]);
        support[static_cast<std::size_t>(y_true[i])] += 1.0;
        predicted[static_cast<std::size_t>(y_pred[i])] += 1.0;
        if (y_true[i] == y_pred[i]) tp[static_cast<std::size_t>(y_true[i])] += 1.0;
    }

    MetricSet m;
    m.support = n;
    const double total_tp = std::accumulate(tp.begin(), tp.end(), 0.0);
    const double dn = static_cast<double>(n);
    m.accuracy = total_tp / dn;

    std::size_t labels = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        const double p = ratio(tp[c], predicted[c]);
        const double r = ratio(tp[c], support[c]);
        const double f = f1(p, r);
        if (support[c] > 0.0 || predicted[c] > 0.0) {
            ++labels;
            m.precision_macro += p;
            m.recall_macro += r;
            m.f1_macro += f;
        }
        m.precision_weighted += support[c] * p;
        m.f1_weighted += support[c] * f;
        if (n_classes == 2 && c == 1) {
            m.precision_pos = p;
            m.recall_pos = r;
            m.f1_pos = f;
        }
    }
    m.precision_macro /= static_cast<double>(labels);
    m.recall_macro /= static_cast<double>(labels);
    m.f1_macro /= static_cast<double>(labels);
    m.precision_weighted /= dn;
    m.f1_weighted /= dn;
    // sum_c (n_c / n) * tp_c / n_c, written so it equals accuracy exactly
    m.recall_weighted = total_tp / dn;

    std::vector<char> positive(n);
    std::vector<double> score(n);
    if (n_classes == 2) {
        for (std::size_t i = 0; i < n; ++i) {
            positive[i] = y_true[i] == 1;
            score[i] = y_score[i * 2 + 1];
        }
        m.auc = roc_auc(positive, score);
    } else {
        double sum = 0.0;
        std::size_t defined = 0;
        for (std::size_t c = 0; c < n_classes; ++c) {
            for (std::size_t i = 0; i < n; ++i) {
                positive[i] = static_cast<std::size_t>(y_true[i]) == c;
                score[i] = y_score[i * n_classes + c];
            }
            if (const auto a = roc_auc(positive, score)) {
                sum += *a;
                ++defined;
            }
        }
        if (defined > 0) m.auc = sum / static_cast<double>(defined);
    }
    return m;
}

RandomPrediction random_baseline(std::span<const int> y_true, std::size_t n_classes, std::uint64_t seed) {
    if (n_classes < 2) throw UsageError("random_baseline: need at least two classes");
    Rng rng(seed);
    RandomPrediction out;
    out.y_pred.reserve(y_true.size());
    out.y_score.reserve(y_true.size() * n_classes);
    std::vector<double> e(n_classes);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        out.y_pred.push_back(static_cast<int>(uniform_index(rng, n_classes)));
        if (n_classes == 2) {
            const double p1 = uniform_unit(rng);
            out.y_score.push_back(1.0 - p1);
            out.y_score.push_back(p1);
            continue;
        }
        // Normalised unit exponentials are uniform on the simplex.
        double s = 0.0;
        for (double& v : e) {
            v = -std::log1p(-uniform_unit(rng));
            s += v;
        }
        for (double v : e) out.y_score.push_back(v / s);
    }
    return out;
}

}  // namespace attentrack
