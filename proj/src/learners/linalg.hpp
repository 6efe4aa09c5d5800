#pragma once

// Small dense helpers for the normal-equation solves inside the learners.

#include <cmath>
#include <optional>
#include <vector>

namespace wps::detail {

// Solves A x = b for symmetric positive definite A (row-major, n x n) by
// Cholesky. Returns nullopt when a pivot is not safely positive.
inline std::optional<std::vector<double>> cholesky_solve(std::vector<double> a, std::vector<double> b, std::size_t n)
{
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::fabs(a[i * n + i]));
    const double floor = 1e-13 * std::max(max_diag, 1e-300);

    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > floor)) return std::nullopt;
        const double l = std::sqrt(d);
        a[j * n + j] = l;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / l;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
        b[i] = s / a[i * n + i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= a[k * n + ii] * b[k];
        b[ii] = s / a[ii * n + ii];
    }
    return b;
}

} // namespace wps::detail
