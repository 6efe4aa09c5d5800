#include "wps/kernels.hpp"
#include "wps/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace wps;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed)
{
    RngStream rng(seed, 3);
    std::vector<double> v(n);
    for (auto& x : v) x = 4.0 * rng.uniform() - 2.0;
    return v;
}

// Reassociation in the vector paths changes rounding, nothing more.
void close(double a, double b, double scale)
{
    CHECK(std::abs(a - b) <= 1e-13 * std::max(1.0, scale));
}

} // namespace

#if defined(WPS_HAVE_AVX2)
TEST_CASE("scalar and avx2 kernels agree")
{
    if (kernels::detected_isa() != kernels::Isa::Avx2) {
        MESSAGE("AVX2 not available; only the scalar path is exercised");
        return;
    }
    // Lengths straddle the 4- and 16-lane boundaries and the remainder loops.
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 17u, 31u, 64u, 257u, 1001u}) {
        CAPTURE(n);
        const auto a = random_vector(n, 10 + n);
        const auto b = random_vector(n, 20 + n);
        double mag = 0.0;
        for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[i]) + std::abs(a[i]) + std::abs(b[i]);

        close(kernels::scalar::dot(a.data(), b.data(), n), kernels::avx2::dot(a.data(), b.data(), n), mag);
        close(kernels::scalar::weighted_sum(a.data(), b.data(), n), kernels::avx2::weighted_sum(a.data(), b.data(), n), mag);
        close(kernels::scalar::sum_abs_diff(a.data(), b.data(), n), kernels::avx2::sum_abs_diff(a.data(), b.data(), n), mag);
        close(kernels::scalar::sum_sq_diff(a.data(), b.data(), n), kernels::avx2::sum_sq_diff(a.data(), b.data(), n), 4 * mag);

        auto ys = b, yv = b;
        kernels::scalar::axpy(0.37, a.data(), ys.data(), n);
        kernels::avx2::axpy(0.37, a.data(), yv.data(), n);
        for (std::size_t i = 0; i < n; ++i) close(ys[i], yv[i], 2.0);
    }
    for (std::size_t rows : {1u, 2u, 5u}) {
        for (std::size_t cols : {1u, 3u, 4u, 6u, 9u, 33u}) {
            const auto a = random_vector(rows * cols, rows * 100 + cols);
            const auto x = random_vector(cols, cols);
            std::vector<double> ys(rows), yv(rows);
            kernels::scalar::gemv(a.data(), rows, cols, x.data(), 0.25, ys.data());
            kernels::avx2::gemv(a.data(), rows, cols, x.data(), 0.25, yv.data());
            for (std::size_t i = 0; i < rows; ++i) close(ys[i], yv[i], 4.0 * cols);
        }
    }
}

#endif

TEST_CASE("runtime selection switches the dispatched path")
{
    const auto before = kernels::active_isa();
    CHECK(kernels::set_active_isa(kernels::Isa::Scalar) == kernels::Isa::Scalar);
    CHECK(kernels::active_isa() == kernels::Isa::Scalar);
    const std::vector<double> a{1, 2, 3, 4, 5}, b{5, 4, 3, 2, 1};
    CHECK(kernels::dot(a, b) == 35.0);
    kernels::set_active_isa(kernels::Isa::Avx2);
    CHECK(kernels::active_isa() == kernels::detected_isa());
    CHECK(kernels::dot(a, b) == 35.0);
    kernels::set_active_isa(before);
    CHECK(kernels::isa_name(kernels::Isa::Scalar) == "scalar");
}
