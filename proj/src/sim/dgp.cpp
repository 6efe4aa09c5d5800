#include "wps/sim.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace wps::sim {

void DgpSpec::validate() const
{
    if (covariate_probs.size() != coefficients.size()) {
        throw std::invalid_argument("dgp: covariate probability and coefficient lengths differ");
    }
    if (covariate_probs.empty() || covariate_probs.size() > 30) {
        throw std::invalid_argument("dgp: covariate count must be between 1 and 30");
    }
    for (double p : covariate_probs) {
        if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("dgp: covariate probabilities must lie in (0,1)");
    }
}

double true_propensity(std::span<const double> x, const DgpSpec& spec)
{
    if (x.size() != spec.coefficients.size()) throw std::invalid_argument("true_propensity: covariate length mismatch");
    double eta = spec.intercept;
    for (std::size_t b = 0; b < x.size(); ++b) {
        if (x[b] != 0.0 && x[b] != 1.0) {
            throw std::invalid_argument("true_propensity: covariate " + std::to_string(b) + " is not binary");
        }
        eta += spec.coefficients[b] * x[b];
    }
    return inverse_logit(eta);
}

PatternGrid enumerate_patterns(const DgpSpec& spec)
{
    spec.validate();
    const std::size_t p = spec.num_covariates();
    const std::size_t count = std::size_t{1} << p;
    PatternGrid grid{Matrix(count, p), std::vector<double>(count), std::vector<double>(count)};
    for (std::size_t k = 0; k < count; ++k) {
        double mass = 1.0;
        for (std::size_t b = 0; b < p; ++b) {
            const bool on = ((k >> b) & 1U) != 0;
            grid.patterns(k, b) = on ? 1.0 : 0.0;
            mass *= on ? spec.covariate_probs[b] : 1.0 - spec.covariate_probs[b];
        }
        grid.mass[k] = mass;
        grid.propensity[k] = true_propensity(grid.patterns.row(k), spec);
    }
    return grid;
}

double marginal_exposure_probability(const DgpSpec& spec)
{
    const PatternGrid grid = enumerate_patterns(spec);
    // Dividing by the summed mass keeps a constant propensity exact.
    double total = 0.0, mass = 0.0;
    for (std::size_t k = 0; k < grid.mass.size(); ++k) {
        total += grid.mass[k] * grid.propensity[k];
        mass += grid.mass[k];
    }
    return total / mass;
}

PopulationDraw draw_population_subject(RngStream& rng, const DgpSpec& spec)
{
    PopulationDraw d;
    d.x.resize(spec.num_covariates());
    for (std::size_t b = 0; b < d.x.size(); ++b) d.x[b] = rng.bernoulli(spec.covariate_probs[b]) ? 1.0 : 0.0;
    d.propensity = true_propensity(d.x, spec);
    d.exposure = rng.bernoulli(d.propensity) ? 1.0 : 0.0;
    return d;
}

namespace {

Cohort assemble(std::vector<PopulationDraw>& rows, SamplingDesign design, RngStream& rng, std::size_t p)
{
    rng.shuffle(rows);
    const std::size_t n = rows.size();
    Matrix x(n, p);
    std::vector<double> e(n), tp(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::copy(rows[i].x.begin(), rows[i].x.end(), x.row(i).begin());
        e[i] = rows[i].exposure;
        tp[i] = rows[i].propensity;
    }
    return Cohort(std::move(x), std::move(e), design, {}, {}, std::move(tp));
}

} // namespace

Cohort sample_conditional_cohort(std::size_t n_exposed, double controls_per_case, RngStream& rng,
                                 const DgpSpec& spec)
{
    spec.validate();
    if (n_exposed < 1) throw std::invalid_argument("conditional cohort: need at least one exposed subject");
    const std::size_t n_controls = realized_control_count(n_exposed, controls_per_case);

    std::vector<PopulationDraw> exposed, controls;
    exposed.reserve(n_exposed);
    controls.reserve(n_controls);
    std::uint64_t draws = 0;
    while (exposed.size() < n_exposed || controls.size() < n_controls) {
        if (++draws > kMaxPopulationDraws) {
            throw std::runtime_error("conditional cohort: population draw limit reached");
        }
        PopulationDraw d = draw_population_subject(rng, spec);
        if (d.exposure == 1.0) {
            if (exposed.size() < n_exposed) exposed.push_back(std::move(d));
        } else if (controls.size() < n_controls) {
            controls.push_back(std::move(d));
        }
    }
    std::vector<PopulationDraw> rows = std::move(exposed);
    rows.insert(rows.end(), std::make_move_iterator(controls.begin()), std::make_move_iterator(controls.end()));
    return assemble(rows, ConditionalOnExposure{n_exposed, controls_per_case}, rng, spec.num_covariates());
}

Cohort sample_random_cohort(std::size_t n, RngStream& rng, const DgpSpec& spec)
{
    spec.validate();
    if (n < 1) throw std::invalid_argument("random cohort: N must be positive");
    std::vector<PopulationDraw> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) rows.push_back(draw_population_subject(rng, spec));
    return assemble(rows, RandomSample{n}, rng, spec.num_covariates());
}

} // namespace wps::sim
