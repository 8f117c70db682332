#include "attentrack/kernels.hpp"

namespace attentrack::kernels::scalar {

void gini_proxy(std::span<const double> left, std::span<const double> totals, std::size_t positions,
                std::span<double> out) {
    const std::size_t k = totals.size();
    for (std::size_t p = 0; p < positions; ++p) {
        double wl = 0.0, wr = 0.0, sl = 0.0, sr = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            const double l = left[c * positions + p];
            const double r = totals[c] - l;
            wl = wl + l;
            wr = wr + r;
            sl = sl + l * l;
            sr = sr + r * r;
        }
        out[p] = sl / wl + sr / wr;
    }
}

void friedman_proxy(std::span<const double> left_weight, std::span<const double> left_sum, double total_weight,
                    double total_sum, std::span<double> out) {
    const std::size_t n = out.size();
    for (std::size_t p = 0; p < n; ++p) {
        const double lw = left_weight[p];
        const double ls = left_sum[p];
        const double rw = total_weight - lw;
        const double rs = total_sum - ls;
        const double diff = rw * ls - lw * rs;
        out[p] = (diff * diff) / (lw * rw);
    }
}

void indicator_sums(std::span<const double> ind, std::size_t stride, std::span<const std::uint32_t> rows,
                    std::span<const double> w, std::span<const double> wt, std::span<double> on,
                    std::span<double> off) {
    const std::size_t m = stride;
    const auto n = static_cast<double>(rows.size());
    for (std::size_t f = 0; f < m; ++f) {
        double on0 = 0.0, on1 = 0.0, on2 = 0.0, off0 = 0.0, off1 = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double x = ind[rows[i] * stride + f];
            const double b = wt[i] * x;
            on1 = on1 + b;
            off1 = off1 + (wt[i] - b);
            on2 = on2 + x;
            if (!w.empty()) {
                const double a = w[i] * x;
                on0 = on0 + a;
                off0 = off0 + (w[i] - a);
            }
        }
        const double off2 = n - on2;
        on[f] = w.empty() ? on2 : on0;
        off[f] = w.empty() ? off2 : off0;
        on[m + f] = on1;
        off[m + f] = off1;
        on[2 * m + f] = on2;
        off[2 * m + f] = off2;
    }
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = y[i] + a * x[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace attentrack::kernels::scalar
