#pragma once

// Simulation population: independent Bernoulli covariates, exposure from a
// main-terms logistic model, and the two cohort sampling schemes.

#include "wps/core.hpp"
#include "wps/rng.hpp"

#include <cstdint>
#include <vector>

namespace wps::sim {

struct DgpSpec {
    std::vector<double> covariate_probs{0.6, 0.4, 0.4, 0.5, 0.4, 0.5};
    std::vector<double> coefficients{3.0, 1.1, 2.2, -1.7, -4.8, -3.7};
    double intercept = 0.0;

    std::size_t num_covariates() const noexcept { return covariate_probs.size(); }
    // Throws unless probabilities lie in (0,1) and lengths agree.
    void validate() const;
};

double true_propensity(std::span<const double> x, const DgpSpec& spec);

// Exact sum over all 2^p covariate patterns of P(X = x) * propensity(x).
double marginal_exposure_probability(const DgpSpec& spec);

// Every covariate pattern with its population mass and propensity.
struct PatternGrid {
    Matrix patterns;
    std::vector<double> mass;
    std::vector<double> propensity;
};
PatternGrid enumerate_patterns(const DgpSpec& spec);

struct PopulationDraw {
    std::vector<double> x;
    double exposure = 0.0;
    double propensity = 0.0;
};

PopulationDraw draw_population_subject(RngStream& rng, const DgpSpec& spec);

inline constexpr std::uint64_t kMaxPopulationDraws = 1'000'000'000ULL;

// Rejection-samples the population until n_exposed exposed and
// round(n_exposed * C) control subjects are collected, then shuffles rows.
Cohort sample_conditional_cohort(std::size_t n_exposed, double controls_per_case, RngStream& rng,
                                 const DgpSpec& spec = {});

Cohort sample_random_cohort(std::size_t n, RngStream& rng, const DgpSpec& spec = {});

} // namespace wps::sim
