#include "wps/core.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace wps;

namespace {

Cohort small_cohort(std::size_t n1, double c)
{
    const std::size_t n0 = realized_control_count(n1, c);
    Matrix x(n1 + n0, 1);
    std::vector<double> e(n1 + n0, 0.0);
    for (std::size_t i = 0; i < n1; ++i) e[i] = 1.0;
    for (std::size_t i = 0; i < n1 + n0; ++i) x(i, 0) = static_cast<double>(i % 2);
    return Cohort(std::move(x), std::move(e), ConditionalOnExposure{n1, c});
}

} // namespace

TEST_CASE("realized control count rounds n x C")
{
    CHECK(realized_control_count(200, 1.0) == 200);
    CHECK(realized_control_count(200, 2.0) == 400);
    CHECK(realized_control_count(10, 1.5) == 15);
}

TEST_CASE("cohort validation")
{
    CHECK_THROWS_AS(Cohort(Matrix(2, 1), {0.0, 2.0}, RandomSample{2}), std::invalid_argument);
    CHECK_THROWS_AS(Cohort(Matrix(2, 1), {0.0}, RandomSample{2}), std::invalid_argument);
    Matrix bad(2, 1);
    bad(0, 0) = NAN;
    CHECK_THROWS_AS(Cohort(bad, {0.0, 1.0}, RandomSample{2}), std::invalid_argument);
    // Design counts must match the rows.
    CHECK_THROWS_AS(Cohort(Matrix(3, 1), {1.0, 0.0, 0.0}, ConditionalOnExposure{1, 1.0}), std::invalid_argument);
    const Cohort ok = small_cohort(3, 1.0);
    CHECK(ok.num_exposed() == 3);
    CHECK(ok.num_controls() == 3);
    CHECK(ok.ids().size() == 6);
}

TEST_CASE("observation weights, raw")
{
    const Cohort c1 = small_cohort(4, 1.0);
    auto w = compute_observation_weights(c1, 0.37, false);
    CHECK(w[0] == doctest::Approx(0.37).epsilon(1e-15));
    CHECK(w[7] == doctest::Approx(0.63).epsilon(1e-15));
    CHECK(*w.w_source() == 0.37);

    w = compute_observation_weights(c1, 0.5, false);
    CHECK(w[0] == w[7]);

    const Cohort c2 = small_cohort(4, 2.0);
    w = compute_observation_weights(c2, 0.37, false);
    CHECK(w[0] == doctest::Approx(0.37).epsilon(1e-15));
    CHECK(w[11] == doctest::Approx(0.315).epsilon(1e-15));
}

TEST_CASE("observation weights, normalized")
{
    const Cohort c = small_cohort(5, 1.5);
    const auto w = compute_observation_weights(c, 0.37, true);
    const double sum = std::accumulate(w.values().begin(), w.values().end(), 0.0);
    CHECK(std::abs(sum - static_cast<double>(c.size())) <= 1e-10 * c.size());
    // The exposed:control ratio is preserved.
    CHECK(w[0] / w[c.size() - 1] == doctest::Approx(0.37 / (0.63 / 1.5)).epsilon(1e-14));
    for (double v : w.values()) CHECK(v > 0.0);

    // Subsets renormalize to their own size.
    const std::vector<std::size_t> rows{0, 1, 8, 9, 10};
    const auto s = w.subset(rows);
    CHECK(std::accumulate(s.values().begin(), s.values().end(), 0.0) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("large-cohort weight example: w=0.19, 5000 exposed, 5000 controls")
{
    const Cohort c = small_cohort(5000, 1.0);
    const auto w = compute_observation_weights(c, 0.19, false);
    CHECK(w[0] == doctest::Approx(0.19).epsilon(1e-15));
    CHECK(w[9999] == doctest::Approx(0.81).epsilon(1e-15));
}

TEST_CASE("invalid w is rejected")
{
    const Cohort c = small_cohort(2, 1.0);
    CHECK_THROWS_AS(compute_observation_weights(c, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(compute_observation_weights(c, 1.0), std::invalid_argument);
}

TEST_CASE("uniform weights")
{
    const auto u = uniform_weights(4);
    CHECK(u.size() == 4);
    for (double v : u.values()) CHECK(v == 1.0);
    CHECK(u.is_uniform());
}

TEST_CASE("weighted log-likelihood examples")
{
    const std::vector<double> half(10, 0.5), ones(10, 1.0);
    std::vector<double> e(10, 0.0);
    for (std::size_t i = 0; i < 5; ++i) e[i] = 1.0;
    CHECK(weighted_log_likelihood(half, e, ones) == doctest::Approx(-6.931471805599453).epsilon(1e-14));

    const std::vector<double> p{1.0, 0.0, 1.0}, e3{1.0, 0.0, 1.0}, w3(3, 1.0);
    const double ll = weighted_log_likelihood(p, e3, w3, 1e-6);
    CHECK(std::isfinite(ll));
    CHECK(ll == doctest::Approx(3.0 * std::log1p(-1e-6)).epsilon(1e-12));

    const std::vector<double> p2{0.8, 0.2}, e2{1.0, 0.0}, w2{0.37, 0.63};
    CHECK(weighted_log_likelihood(p2, e2, w2) == doctest::Approx(-0.2231435513142098).epsilon(1e-14));

    CHECK_THROWS(weighted_log_likelihood(p2, e2, w2, 0.5));
    CHECK_THROWS(weighted_log_likelihood(p2, e3, w2));
}

TEST_CASE("weighted mean loss")
{
    const std::vector<double> p{0.8, 0.2}, e{1.0, 0.0}, w{1.0, 3.0};
    CHECK(weighted_mean_loss(LossFunction{}, p, e, w) == doctest::Approx(-std::log(0.8)).epsilon(1e-14));
    CHECK(weighted_mean_loss(LossFunction{LossKind::SquaredError}, p, e, w) == doctest::Approx(0.04).epsilon(1e-14));
}

TEST_CASE("inverse logit")
{
    CHECK(inverse_logit(0.0) == 0.5);
    CHECK(std::abs(inverse_logit(40.0) - 1.0) <= 1e-15);
    CHECK(inverse_logit(-800.0) >= 0.0);
    CHECK(inverse_logit(-3.7) == doctest::Approx(0.024127021417669197).epsilon(1e-14));
    CHECK(logit(inverse_logit(1.3)) == doctest::Approx(1.3).epsilon(1e-13));
}
