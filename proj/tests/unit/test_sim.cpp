#include "wps/rng.hpp"
#include "wps/sim.hpp"

#include <doctest.h>

#include <cmath>

using namespace wps;

TEST_CASE("true propensity examples")
{
    const sim::DgpSpec spec;
    CHECK(sim::true_propensity(std::vector<double>{0, 0, 0, 0, 0, 0}, spec) == 0.5);
    CHECK(sim::true_propensity(std::vector<double>{1, 1, 1, 0, 0, 0}, spec) ==
          doctest::Approx(0.9981670610575072).epsilon(1e-14));
    CHECK(sim::true_propensity(std::vector<double>{0, 0, 0, 1, 1, 1}, spec) ==
          doctest::Approx(3.716893710288947e-5).epsilon(1e-12));
}

TEST_CASE("marginal exposure probability by enumeration")
{
    // High-precision reference: sum over the 64 patterns in 40-digit arithmetic.
    CHECK(sim::marginal_exposure_probability({}) == doctest::Approx(0.3679089762).epsilon(1e-9));

    sim::DgpSpec zero;
    zero.coefficients.assign(6, 0.0);
    CHECK(sim::marginal_exposure_probability(zero) == 0.5);

    const auto grid = sim::enumerate_patterns({});
    CHECK(grid.patterns.rows() == 64);
    double mass = 0.0;
    for (double m : grid.mass) mass += m;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("population draws agree with the enumeration")
{
    const sim::DgpSpec spec;
    RngStream rng(99, 1);
    const std::size_t n = 1'000'000;
    double e = 0.0, x1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto d = sim::draw_population_subject(rng, spec);
        e += d.exposure;
        x1 += d.x[0];
    }
    const double p = sim::marginal_exposure_probability(spec);
    CHECK(std::abs(e / n - p) <= 3.0 * std::sqrt(p * (1 - p) / n));
    CHECK(std::abs(x1 / n - 0.6) <= 3.0 * std::sqrt(0.24 / n));

    RngStream a(5, 0), b(5, 0);
    CHECK(sim::draw_population_subject(a, spec).x == sim::draw_population_subject(b, spec).x);
}

TEST_CASE("conditional cohorts have the requested counts")
{
    RngStream rng(1, 0);
    auto c = sim::sample_conditional_cohort(200, 1.0, rng);
    CHECK(c.size() == 400);
    CHECK(c.num_exposed() == 200);
    c = sim::sample_conditional_cohort(200, 2.0, rng);
    CHECK(c.num_controls() == 400);
    CHECK(c.size() == 600);
    c = sim::sample_conditional_cohort(10, 1.5, rng);
    CHECK(c.num_controls() == 15);
    REQUIRE(c.true_propensity().has_value());
    CHECK(c.true_propensity()->size() == c.size());
}

TEST_CASE("random cohorts")
{
    RngStream rng(2, 0);
    const auto c = sim::sample_random_cohort(3000, rng);
    const double p = sim::marginal_exposure_probability({});
    const double frac = static_cast<double>(c.num_exposed()) / 3000.0;
    CHECK(std::abs(frac - p) <= 3.0 * std::sqrt(p * (1 - p) / 3000.0));

    RngStream one(3, 0);
    CHECK(sim::sample_random_cohort(1, one).size() == 1);

    RngStream a(7, 0), b(7, 0);
    const auto ca = sim::sample_random_cohort(50, a), cb = sim::sample_random_cohort(50, b);
    CHECK(std::vector<double>(ca.exposure().begin(), ca.exposure().end()) ==
          std::vector<double>(cb.exposure().begin(), cb.exposure().end()));
}

TEST_CASE("rng streams")
{
    RngStream a(1, 0), b(1, 1);
    CHECK(a.next_u64() != b.next_u64());
    CHECK(mix_seed(1, 2) != mix_seed(2, 1));
    RngStream u(4, 4);
    for (int i = 0; i < 1000; ++i) {
        const double v = u.uniform();
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
        CHECK(u.uniform_index(7) < 7);
    }
}

TEST_CASE("enumeration against a ten-million-draw Monte Carlo estimate")
{
    const sim::DgpSpec spec;
    RngStream rng(2024, 3);
    const std::size_t n = 10'000'000;
    std::size_t exposed = 0;
    for (std::size_t i = 0; i < n; ++i) exposed += sim::draw_population_subject(rng, spec).exposure == 1.0;
    const double p = sim::marginal_exposure_probability(spec);
    const double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(static_cast<double>(exposed) / n - p) <= 3.0 * se);
    // The printed population value sits well outside that band.
    CHECK(std::abs(0.3712 - p) > 3.0 * se);
}
