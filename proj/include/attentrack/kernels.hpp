#pragma once

// Data-parallel inner loops used by tree fitting, boosting and the mixed model.
// Each kernel has a scalar reference and an AVX2 variant; the active variant is
// picked once at startup from CPUID and can be forced for testing.
//
// The elementwise kernels (gini_proxy, friedman_proxy, indicator_sums, axpy) perform the same
// IEEE operations in the same order in every variant, so their outputs are
// bitwise identical across ISAs. dot() is a reduction and only agrees to
// rounding.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace attentrack::kernels {

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa);
bool isa_supported(Isa isa);
Isa active_isa();
// Throws UsageError when `isa` is not supported by this CPU/build.
void set_active_isa(Isa isa);

// Split-scan proxy for weighted gini: for each candidate position p,
//   out[p] = sum_c L[c][p]^2 / wl + sum_c R[c][p]^2 / wr
// with L class-major (left[c * positions + p]), R[c][p] = totals[c] - L[c][p],
// wl = sum_c L[c][p], wr = sum_c R[c][p]. Both sides must carry weight.
void gini_proxy(std::span<const double> left, std::span<const double> totals, std::size_t positions,
                std::span<double> out);

// Friedman improvement proxy: with rw = W - lw, rs = S - ls,
//   out[p] = (rw*ls - lw*rs)^2 / (lw*rw)
void friedman_proxy(std::span<const double> left_weight, std::span<const double> left_sum, double total_weight,
                    double total_sum, std::span<double> out);

// Per-code sums over a row-major 0/1 block with `stride` columns. For each
// column f and each listed row r, in order, with x = ind[r * stride + f]:
//   on[f]     += w[i] * x         off[f]     += w[i] - w[i] * x
//   on[m+f]   += wt[i] * x        off[m+f]   += wt[i] - wt[i] * x
//   on[2m+f]  += x                off[2m+f]  += 1 - x
// where i indexes `rows` and m = stride. on/off (3m each) are overwritten.
// Empty `w` means unit weights (the first block then equals the counts).
void indicator_sums(std::span<const double> ind, std::size_t stride, std::span<const std::uint32_t> rows,
                    std::span<const double> w, std::span<const double> wt, std::span<double> on,
                    std::span<double> off);

// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);

double dot(std::span<const double> a, std::span<const double> b);

namespace scalar {
void gini_proxy(std::span<const double>, std::span<const double>, std::size_t, std::span<double>);
void friedman_proxy(std::span<const double>, std::span<const double>, double, double, std::span<double>);
void indicator_sums(std::span<const double>, std::size_t, std::span<const std::uint32_t>, std::span<const double>,
                    std::span<const double>, std::span<double>, std::span<double>);
void axpy(double, std::span<const double>, std::span<double>);
double dot(std::span<const double>, std::span<const double>);
}  // namespace scalar

#if defined(ATTENTRACK_HAVE_AVX2)
namespace avx2 {
void gini_proxy(std::span<const double>, std::span<const double>, std::size_t, std::span<double>);
void friedman_proxy(std::span<const double>, std::span<const double>, double, double, std::span<double>);
void indicator_sums(std::span<const double>, std::size_t, std::span<const std::uint32_t>, std::span<const double>,
                    std::span<const double>, std::span<double>, std::span<double>);
void axpy(double, std::span<const double>, std::span<double>);
double dot(std::span<const double>, std::span<const double>);
}  // namespace avx2
#endif

}  // namespace attentrack::kernels
