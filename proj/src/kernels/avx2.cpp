// Compiled with -mavx2 -mfma. Only reached through the dispatcher after a
// runtime CPU check.

#include "wps/kernels.hpp"

#include <cmath>
#include <immintrin.h>

namespace wps::kernels::avx2 {

namespace {

inline double hsum(__m256d v)
{
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    const __m128d sh = _mm_unpackhi_pd(s, s);
    return _mm_cvtsd_f64(_mm_add_sd(s, sh));
}

inline __m256d abs_pd(__m256d v)
{
    const __m256d sign = _mm256_set1_pd(-0.0);
    return _mm256_andnot_pd(sign, v);
}

} // namespace

double dot(const double* a, const double* b, std::size_t n)
{
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n)
{
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double weighted_sum(const double* w, const double* x, std::size_t n)
{
    return dot(w, x, n);
}

double sum_abs_diff(const double* a, const double* b, std::size_t n)
{
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_add_pd(acc, abs_pd(d));
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += std::fabs(a[i] - b[i]);
    return s;
}

double sum_sq_diff(const double* a, const double* b, std::size_t n)
{
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x, double bias, double* y)
{
    // Narrow rows (the common case here: a handful of covariates) are
    // processed four at a time so the FMA lanes stay busy.
    std::size_t r = 0;
    if (cols < 8) {
        for (; r + 4 <= rows; r += 4) {
            __m256d acc = _mm256_set1_pd(bias);
            for (std::size_t j = 0; j < cols; ++j) {
                const __m256d col = _mm256_set_pd(a[(r + 3) * cols + j], a[(r + 2) * cols + j],
                                                  a[(r + 1) * cols + j], a[r * cols + j]);
                acc = _mm256_fmadd_pd(col, _mm256_set1_pd(x[j]), acc);
            }
            _mm256_storeu_pd(y + r, acc);
        }
    }
    for (; r < rows; ++r) {
        y[r] = bias + dot(a + r * cols, x, cols);
    }
}

} // namespace wps::kernels::avx2
