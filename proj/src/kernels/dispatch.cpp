#include <atomic>
#include <cstdlib>
#include <string>

#include "attentrack/error.hpp"
#include "attentrack/kernels.hpp"

namespace attentrack::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(ATTENTRACK_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

Isa initial_isa() {
    if (const char* env = std::getenv("ATTENTRACK_SIMD")) {
        if (std::string(env) == "scalar") return Isa::scalar;
    }
    return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() {
    static std::atomic<Isa> isa{initial_isa()};
    return isa;
}

}  // namespace

std::string_view to_string(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_supported(Isa isa) { return isa == Isa::scalar || cpu_has_avx2(); }

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
    if (!isa_supported(isa)) throw UsageError("ISA '" + std::string(to_string(isa)) + "' is not supported here");
    current().store(isa, std::memory_order_relaxed);
}

#if defined(ATTENTRACK_HAVE_AVX2)
#define ATTENTRACK_DISPATCH(fn, ...) \
    (active_isa() == Isa::avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))
#else
#define ATTENTRACK_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

void gini_proxy(std::span<const double> left, std::span<const double> totals, std::size_t positions,
                std::span<double> out) {
    ATTENTRACK_DISPATCH(gini_proxy, left, totals, positions, out);
}

void friedman_proxy(std::span<const double> left_weight, std::span<const double> left_sum, double total_weight,
                    double total_sum, std::span<double> out) {
    ATTENTRACK_DISPATCH(friedman_proxy, left_weight, left_sum, total_weight, total_sum, out);
}

void indicator_sums(std::span<const double> ind, std::size_t stride, std::span<const std::uint32_t> rows,
                    std::span<const double> w, std::span<const double> wt, std::span<double> on,
                    std::span<double> off) {
    ATTENTRACK_DISPATCH(indicator_sums, ind, stride, rows, w, wt, on, off);
}

void axpy(double a, std::span<const double> x, std::span<double> y) { ATTENTRACK_DISPATCH(axpy, a, x, y); }

double dot(std::span<const double> a, std::span<const double> b) { return ATTENTRACK_DISPATCH(dot, a, b); }

}  // namespace attentrack::kernels
