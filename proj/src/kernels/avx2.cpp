// Compiled with -mavx2; only reached when CPUID reports AVX2.
#include <immintrin.h>

#include "attentrack/kernels.hpp"

namespace attentrack::kernels::avx2 {

void gini_proxy(std::span<const double> left, std::span<const double> totals, std::size_t positions,
                std::span<double> out) {
    const std::size_t k = totals.size();
    std::size_t p = 0;
    for (; p + 4 <= positions; p += 4) {
        __m256d wl = _mm256_setzero_pd();
        __m256d wr = _mm256_setzero_pd();
        __m256d sl = _mm256_setzero_pd();
        __m256d sr = _mm256_setzero_pd();
        for (std::size_t c = 0; c < k; ++c) {
            const __m256d l = _mm256_loadu_pd(left.data() + c * positions + p);
            const __m256d r = _mm256_sub_pd(_mm256_set1_pd(totals[c]), l);
            wl = _mm256_add_pd(wl, l);
            wr = _mm256_add_pd(wr, r);
            sl = _mm256_add_pd(sl, _mm256_mul_pd(l, l));
            sr = _mm256_add_pd(sr, _mm256_mul_pd(r, r));
        }
        _mm256_storeu_pd(out.data() + p, _mm256_add_pd(_mm256_div_pd(sl, wl), _mm256_div_pd(sr, wr)));
    }
    for (; p < positions; ++p) {
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
    const __m256d tw = _mm256_set1_pd(total_weight);
    const __m256d ts = _mm256_set1_pd(total_sum);
    std::size_t p = 0;
    for (; p + 4 <= n; p += 4) {
        const __m256d lw = _mm256_loadu_pd(left_weight.data() + p);
        const __m256d ls = _mm256_loadu_pd(left_sum.data() + p);
        const __m256d rw = _mm256_sub_pd(tw, lw);
        const __m256d rs = _mm256_sub_pd(ts, ls);
        const __m256d diff = _mm256_sub_pd(_mm256_mul_pd(rw, ls), _mm256_mul_pd(lw, rs));
        _mm256_storeu_pd(out.data() + p, _mm256_div_pd(_mm256_mul_pd(diff, diff), _mm256_mul_pd(lw, rw)));
    }
    for (; p < n; ++p) {
        const double lw = left_weight[p];
        const double ls = left_sum[p];
        const double rw = total_weight - lw;
        const double rs = total_sum - ls;
        const double diff = rw * ls - lw * rs;
        out[p] = (diff * diff) / (lw * rw);
    }
}

namespace {

// kWide registers (4 columns each) per pass; acc holds on0, off0, on1, off1, on2 per register.
constexpr std::size_t kWide = 4;

template <bool Weighted, std::size_t Wide>
void indicator_block(const double* ind, std::size_t stride, std::span<const std::uint32_t> rows, const double* w,
                     const double* wt, std::size_t f, __m256d (*acc)[5]) {
    __m256d on0[Wide], off0[Wide], on1[Wide], off1[Wide], on2[Wide];
    for (std::size_t k = 0; k < Wide; ++k) {
        on0[k] = off0[k] = on1[k] = off1[k] = on2[k] = _mm256_setzero_pd();
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double* row = ind + rows[i] * stride + f;
        const __m256d vt = _mm256_set1_pd(wt[i]);
        for (std::size_t k = 0; k < Wide; ++k) {
            const __m256d x = _mm256_loadu_pd(row + 4 * k);
            const __m256d b = _mm256_mul_pd(vt, x);
            on1[k] = _mm256_add_pd(on1[k], b);
            off1[k] = _mm256_add_pd(off1[k], _mm256_sub_pd(vt, b));
            on2[k] = _mm256_add_pd(on2[k], x);
            if constexpr (Weighted) {
                const __m256d vw = _mm256_set1_pd(w[i]);
                const __m256d a = _mm256_mul_pd(vw, x);
                on0[k] = _mm256_add_pd(on0[k], a);
                off0[k] = _mm256_add_pd(off0[k], _mm256_sub_pd(vw, a));
            }
        }
    }
    for (std::size_t k = 0; k < Wide; ++k) {
        acc[k][0] = on0[k];
        acc[k][1] = off0[k];
        acc[k][2] = on1[k];
        acc[k][3] = off1[k];
        acc[k][4] = on2[k];
    }
}

template <std::size_t Wide>
void indicator_pass(std::span<const double> ind, std::size_t stride, std::span<const std::uint32_t> rows,
                    std::span<const double> w, std::span<const double> wt, std::span<double> on,
                    std::span<double> off, std::size_t f) {
    const std::size_t m = stride;
    const __m256d n = _mm256_set1_pd(static_cast<double>(rows.size()));
    __m256d acc[Wide][5];
    if (w.empty())
        indicator_block<false, Wide>(ind.data(), stride, rows, nullptr, wt.data(), f, acc);
    else
        indicator_block<true, Wide>(ind.data(), stride, rows, w.data(), wt.data(), f, acc);
    for (std::size_t k = 0; k < Wide; ++k) {
        const std::size_t c = f + 4 * k;
        const __m256d off2 = _mm256_sub_pd(n, acc[k][4]);
        _mm256_storeu_pd(on.data() + c, w.empty() ? acc[k][4] : acc[k][0]);
        _mm256_storeu_pd(off.data() + c, w.empty() ? off2 : acc[k][1]);
        _mm256_storeu_pd(on.data() + m + c, acc[k][2]);
        _mm256_storeu_pd(off.data() + m + c, acc[k][3]);
        _mm256_storeu_pd(on.data() + 2 * m + c, acc[k][4]);
        _mm256_storeu_pd(off.data() + 2 * m + c, off2);
    }
}

}  // namespace

void indicator_sums(std::span<const double> ind, std::size_t stride, std::span<const std::uint32_t> rows,
                    std::span<const double> w, std::span<const double> wt, std::span<double> on,
                    std::span<double> off) {
    const std::size_t m = stride;
    std::size_t f = 0;
    for (; f + 4 * kWide <= m; f += 4 * kWide) indicator_pass<kWide>(ind, stride, rows, w, wt, on, off, f);
    for (; f + 4 <= m; f += 4) indicator_pass<1>(ind, stride, rows, w, wt, on, off, f);
    for (; f < m; ++f) {
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
        const double off2 = static_cast<double>(rows.size()) - on2;
        on[f] = w.empty() ? on2 : on0;
        off[f] = w.empty() ? off2 : off0;
        on[m + f] = on1;
        off[m + f] = off1;
        on[2 * m + f] = on2;
        off[2 * m + f] = off2;
    }
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= y.size(); i += 4) {
        const __m256d vy = _mm256_loadu_pd(y.data() + i);
        const __m256d vx = _mm256_loadu_pd(x.data() + i);
        _mm256_storeu_pd(y.data() + i, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
    }
    for (; i < y.size(); ++i) y[i] = y[i] + a * x[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= a.size(); i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i)));
        acc1 = _mm256_add_pd(acc1,
                             _mm256_mul_pd(_mm256_loadu_pd(a.data() + i + 4), _mm256_loadu_pd(b.data() + i + 4)));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
    double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace attentrack::kernels::avx2
