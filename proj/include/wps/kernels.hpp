#pragma once

// Inner-loop arithmetic kernels. Every kernel has a scalar reference
// implementation; on x86-64 an AVX2/FMA variant is compiled separately and
// selected at runtime when the CPU supports it. The two variants agree up to
// floating-point reassociation in reductions.

#include <cstddef>
#include <span>
#include <string_view>

namespace wps::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa) noexcept;

// Best ISA supported by both the build and the running CPU.
Isa detected_isa() noexcept;

// ISA currently used by the dispatching entry points. Defaults to
// detected_isa(), or Scalar when WPS_KERNELS=scalar is set in the environment.
Isa active_isa() noexcept;

// Override the active ISA (tests, benchmarking). Requests for an ISA that is
// unavailable fall back to Scalar. Returns the ISA actually selected.
Isa set_active_isa(Isa isa) noexcept;

// sum_i a[i] * b[i]
double dot(std::span<const double> a, std::span<const double> b);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
// sum_i w[i] * x[i]
double weighted_sum(std::span<const double> w, std::span<const double> x);
// sum_i |a[i] - b[i]|
double sum_abs_diff(std::span<const double> a, std::span<const double> b);
// sum_i (a[i] - b[i])^2
double sum_sq_diff(std::span<const double> a, std::span<const double> b);
// y = A x + bias for row-major A (rows x cols); y has length rows.
void gemv(std::span<const double> a, std::size_t rows, std::size_t cols,
          std::span<const double> x, double bias, std::span<double> y);

// Variant entry points, exposed for equivalence testing.
namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double weighted_sum(const double* w, const double* x, std::size_t n);
double sum_abs_diff(const double* a, const double* b, std::size_t n);
double sum_sq_diff(const double* a, const double* b, std::size_t n);
void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x, double bias, double* y);
} // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double weighted_sum(const double* w, const double* x, std::size_t n);
double sum_abs_diff(const double* a, const double* b, std::size_t n);
double sum_sq_diff(const double* a, const double* b, std::size_t n);
void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x, double bias, double* y);
} // namespace avx2

} // namespace wps::kernels
