#include "wps/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace wps::kernels {

namespace {

bool cpu_has_avx2() noexcept
{
#if defined(WPS_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa initial_isa() noexcept
{
    if (const char* env = std::getenv("WPS_KERNELS"); env != nullptr && std::string(env) == "scalar") {
        return Isa::Scalar;
    }
    return detected_isa();
}

std::atomic<Isa>& active() noexcept
{
    static std::atomic<Isa> isa{initial_isa()};
    return isa;
}

void check_same_length(std::size_t a, std::size_t b, const char* what)
{
    if (a != b) throw std::invalid_argument(std::string(what) + ": length mismatch");
}

} // namespace

std::string_view isa_name(Isa isa) noexcept
{
    switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    }
    return "unknown";
}

Isa detected_isa() noexcept
{
    static const Isa isa = cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
    return isa;
}

Isa active_isa() noexcept { return active().load(std::memory_order_relaxed); }

Isa set_active_isa(Isa isa) noexcept
{
    if (isa == Isa::Avx2 && detected_isa() != Isa::Avx2) isa = Isa::Scalar;
    active().store(isa, std::memory_order_relaxed);
    return isa;
}

#if defined(WPS_HAVE_AVX2)
#define WPS_DISPATCH(fn, ...) \
    (active_isa() == Isa::Avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))
#else
#define WPS_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

double dot(std::span<const double> a, std::span<const double> b)
{
    check_same_length(a.size(), b.size(), "dot");
    return WPS_DISPATCH(dot, a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y)
{
    check_same_length(x.size(), y.size(), "axpy");
    WPS_DISPATCH(axpy, alpha, x.data(), y.data(), x.size());
}

double weighted_sum(std::span<const double> w, std::span<const double> x)
{
    check_same_length(w.size(), x.size(), "weighted_sum");
    return WPS_DISPATCH(weighted_sum, w.data(), x.data(), w.size());
}

double sum_abs_diff(std::span<const double> a, std::span<const double> b)
{
    check_same_length(a.size(), b.size(), "sum_abs_diff");
    return WPS_DISPATCH(sum_abs_diff, a.data(), b.data(), a.size());
}

double sum_sq_diff(std::span<const double> a, std::span<const double> b)
{
    check_same_length(a.size(), b.size(), "sum_sq_diff");
    return WPS_DISPATCH(sum_sq_diff, a.data(), b.data(), a.size());
}

void gemv(std::span<const double> a, std::size_t rows, std::size_t cols,
          std::span<const double> x, double bias, std::span<double> y)
{
    if (a.size() != rows * cols || x.size() != cols || y.size() != rows) {
        throw std::invalid_argument("gemv: dimension mismatch");
    }
    WPS_DISPATCH(gemv, a.data(), rows, cols, x.data(), bias, y.data());
}

#undef WPS_DISPATCH

} // namespace wps::kernels
