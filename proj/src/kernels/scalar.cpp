#include "wps/kernels.hpp"

#include <cmath>

namespace wps::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n)
{
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double weighted_sum(const double* w, const double* x, std::size_t n)
{
    return dot(w, x, n);
}

double sum_abs_diff(const double* a, const double* b, std::size_t n)
{
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::fabs(a[i] - b[i]);
    return s;
}

double sum_sq_diff(const double* a, const double* b, std::size_t n)
{
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x, double bias, double* y)
{
    for (std::size_t r = 0; r < rows; ++r) {
        y[r] = bias + dot(a + r * cols, x, cols);
    }
}

} // namespace wps::kernels::scalar
