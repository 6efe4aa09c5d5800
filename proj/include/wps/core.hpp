#pragma once

// Cohort data model, exposure-probability observation weights, and the
// weighted losses shared by every learner and by the stacking meta-solve.

#include "wps/matrix.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace wps {

// Sampled n exposed subjects and round(n * C) controls from the conditional
// laws X | E=1 and X | E=0.
struct ConditionalOnExposure {
    std::size_t n_exposed = 0;
    double controls_per_case = 1.0;
    friend bool operator==(const ConditionalOnExposure&, const ConditionalOnExposure&) = default;
};

// Sampled N subjects from the full population without conditioning on E.
struct RandomSample {
    std::size_t n = 0;
    friend bool operator==(const RandomSample&, const RandomSample&) = default;
};

using SamplingDesign = std::variant<ConditionalOnExposure, RandomSample>;

// Realized control count for a nominal (possibly fractional) C.
std::size_t realized_control_count(std::size_t n_exposed, double controls_per_case);

class Cohort {
public:
    // Validates: exposure in {0,1}, finite covariates, matching lengths, and
    // design counts. Empty ids are replaced by zero-padded row positions.
    Cohort(Matrix covariates, std::vector<double> exposure, SamplingDesign design,
           std::vector<std::string> ids = {}, std::vector<std::string> covariate_names = {},
           std::optional<std::vector<double>> true_propensity = std::nullopt);

    std::size_t size() const noexcept { return exposure_.size(); }
    std::size_t num_covariates() const noexcept { return covariates_.cols(); }
    std::size_t num_exposed() const noexcept { return n_exposed_; }
    std::size_t num_controls() const noexcept { return size() - n_exposed_; }

    const Matrix& covariates() const noexcept { return covariates_; }
    std::span<const double> exposure() const noexcept { return exposure_; }
    const SamplingDesign& design() const noexcept { return design_; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    const std::vector<std::string>& covariate_names() const noexcept { return covariate_names_; }

    // Generation-time propensities; present for simulated cohorts only.
    const std::optional<std::vector<double>>& true_propensity() const noexcept { return true_propensity_; }

    bool is_conditional() const noexcept { return std::holds_alternative<ConditionalOnExposure>(design_); }

    // Same rows in a new order; order must be a permutation of 0..N-1.
    Cohort permuted(std::span<const std::size_t> order) const;

private:
    Matrix covariates_;
    std::vector<double> exposure_;
    SamplingDesign design_;
    std::vector<std::string> ids_;
    std::vector<std::string> covariate_names_;
    std::optional<std::vector<double>> true_propensity_;
    std::size_t n_exposed_ = 0;
};

// Per-observation likelihood weights and where they came from.
class WeightVector {
public:
    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    // Population exposure probability used to build the weights; empty for
    // uniform weights.
    std::optional<double> w_source() const noexcept { return w_source_; }
    std::optional<double> controls_per_case() const noexcept { return controls_per_case_; }
    bool normalized() const noexcept { return normalized_; }
    bool is_uniform() const noexcept { return !w_source_.has_value(); }

    // Weights for a row subset. Normalized weights are rescaled so the subset
    // again sums to its own row count.
    WeightVector subset(std::span<const std::size_t> rows) const;

private:
    friend WeightVector compute_observation_weights(const Cohort&, double, bool);
    friend WeightVector uniform_weights(const Cohort&);
    friend WeightVector uniform_weights(std::size_t);

    WeightVector(std::vector<double> values, std::optional<double> w_source,
                 std::optional<double> controls_per_case, bool normalized);

    std::vector<double> values_;
    std::optional<double> w_source_;
    std::optional<double> controls_per_case_;
    bool normalized_ = false;
};

// Exposed rows get w, control rows get (1 - w) / C. With normalize, every
// weight is scaled by one constant so the total is N.
WeightVector compute_observation_weights(const Cohort& cohort, double w, bool normalize = true);

WeightVector uniform_weights(const Cohort& cohort);
WeightVector uniform_weights(std::size_t n);

enum class LossKind { NegLogLikelihood, SquaredError };

struct LossFunction {
    LossKind kind = LossKind::NegLogLikelihood;
    double clip_epsilon = 1e-6;

    // Throws unless clip_epsilon is in (0, 0.5).
    void validate() const;
};

inline constexpr double kDefaultClip = 1e-6;

double clip_probability(double p, double eps) noexcept;

// sum_i w_i [E_i log p~_i + (1 - E_i) log(1 - p~_i)], p~ clipped to
// [eps, 1 - eps].
double weighted_log_likelihood(std::span<const double> probs, std::span<const double> exposure,
                               std::span<const double> weights, double clip_epsilon = kDefaultClip);
double weighted_log_likelihood(std::span<const double> probs, std::span<const double> exposure,
                               const WeightVector& weights, double clip_epsilon = kDefaultClip);

// Weighted mean loss: -loglik / sum(w) for NegLogLikelihood, weighted mean
// squared error for SquaredError.
double weighted_mean_loss(const LossFunction& loss, std::span<const double> probs,
                          std::span<const double> exposure, std::span<const double> weights);

// 1 / (1 + exp(-x)), evaluated on the branch that cannot overflow.
double inverse_logit(double x);

double logit(double p);

} // namespace wps
