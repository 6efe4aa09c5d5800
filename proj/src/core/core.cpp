#include "wps/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace wps {

std::size_t realized_control_count(std::size_t n_exposed, double controls_per_case)
{
    if (!(controls_per_case > 0.0) || !std::isfinite(controls_per_case)) {
        throw std::invalid_argument("controls per case must be a positive finite number");
    }
    return static_cast<std::size_t>(std::llround(static_cast<double>(n_exposed) * controls_per_case));
}

namespace {

std::vector<std::string> positional_ids(std::size_t n)
{
    const std::size_t width = std::max<std::size_t>(6, std::to_string(n).size());
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::string digits = std::to_string(i);
        ids[i] = std::string(width - std::min(width, digits.size()), '0') + digits;
    }
    return ids;
}

} // namespace

Cohort::Cohort(Matrix covariates, std::vector<double> exposure, SamplingDesign design,
               std::vector<std::string> ids, std::vector<std::string> covariate_names,
               std::optional<std::vector<double>> true_propensity)
    : covariates_(std::move(covariates)),
      exposure_(std::move(exposure)),
      design_(design),
      ids_(std::move(ids)),
      covariate_names_(std::move(covariate_names)),
      true_propensity_(std::move(true_propensity))
{
    const std::size_t n = exposure_.size();
    if (covariates_.rows() != n) {
        throw std::invalid_argument("cohort: covariate rows (" + std::to_string(covariates_.rows()) +
                                    ") do not match exposure length (" + std::to_string(n) + ")");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (exposure_[i] != 0.0 && exposure_[i] != 1.0) {
            throw std::invalid_argument("cohort: exposure at row " + std::to_string(i) + " is not 0 or 1");
        }
    }
    for (std::size_t i = 0; i < covariates_.rows(); ++i) {
        for (std::size_t j = 0; j < covariates_.cols(); ++j) {
            if (!std::isfinite(covariates_(i, j))) {
                throw std::invalid_argument("cohort: non-finite covariate at row " + std::to_string(i) +
                                            ", column " + std::to_string(j));
            }
        }
    }
    if (ids_.empty()) {
        ids_ = positional_ids(n);
    } else if (ids_.size() != n) {
        throw std::invalid_argument("cohort: id count does not match row count");
    }
    if (covariate_names_.empty()) {
        for (std::size_t j = 0; j < covariates_.cols(); ++j) covariate_names_.push_back("x" + std::to_string(j + 1));
    } else if (covariate_names_.size() != covariates_.cols()) {
        throw std::invalid_argument("cohort: covariate name count does not match column count");
    }
    if (true_propensity_ && true_propensity_->size() != n) {
        throw std::invalid_argument("cohort: true propensity length does not match row count");
    }

    n_exposed_ = static_cast<std::size_t>(std::count(exposure_.begin(), exposure_.end(), 1.0));

    if (const auto* cond = std::get_if<ConditionalOnExposure>(&design_)) {
        if (cond->n_exposed != n_exposed_) {
            throw std::invalid_argument("cohort: design declares " + std::to_string(cond->n_exposed) +
                                        " exposed rows but data has " + std::to_string(n_exposed_));
        }
        const std::size_t controls = realized_control_count(cond->n_exposed, cond->controls_per_case);
        if (controls != n - n_exposed_) {
            throw std::invalid_argument("cohort: design implies " + std::to_string(controls) +
                                        " control rows but data has " + std::to_string(n - n_exposed_));
        }
    } else {
        const auto& rs = std::get<RandomSample>(design_);
        if (rs.n != n) {
            throw std::invalid_argument("cohort: random-sample design size does not match row count");
        }
    }
}

Cohort Cohort::permuted(std::span<const std::size_t> order) const
{
    const std::size_t n = size();
    if (order.size() != n) throw std::invalid_argument("cohort: permutation length mismatch");
    std::vector<bool> seen(n, false);
    for (std::size_t i : order) {
        if (i >= n || seen[i]) throw std::invalid_argument("cohort: order is not a permutation");
        seen[i] = true;
    }
    std::vector<double> e(n);
    std::vector<std::string> ids(n);
    std::optional<std::vector<double>> tp;
    if (true_propensity_) tp.emplace(n);
    for (std::size_t r = 0; r < n; ++r) {
        e[r] = exposure_[order[r]];
        ids[r] = ids_[order[r]];
        if (tp) (*tp)[r] = (*true_propensity_)[order[r]];
    }
    return Cohort(covariates_.select_rows(order), std::move(e), design_, std::move(ids), covariate_names_,
                  std::move(tp));
}

WeightVector::WeightVector(std::vector<double> values, std::optional<double> w_source,
                           std::optional<double> controls_per_case, bool normalized)
    : values_(std::move(values)), w_source_(w_source), controls_per_case_(controls_per_case), normalized_(normalized)
{
    for (double v : values_) {
        if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("weights must be positive and finite");
    }
    if (normalized_ && !values_.empty()) {
        const double total = std::accumulate(values_.begin(), values_.end(), 0.0);
        const double n = static_cast<double>(values_.size());
        if (std::fabs(total - n) > 1e-10 * n) throw std::logic_error("normalized weights do not sum to N");
    }
}

WeightVector WeightVector::subset(std::span<const std::size_t> rows) const
{
    std::vector<double> v;
    v.reserve(rows.size());
    for (std::size_t r : rows) {
        if (r >= values_.size()) throw std::out_of_range("weight subset: row index out of range");
        v.push_back(values_[r]);
    }
    if (normalized_ && !v.empty()) {
        const double total = std::accumulate(v.begin(), v.end(), 0.0);
        const double scale = static_cast<double>(v.size()) / total;
        for (double& x : v) x *= scale;
    }
    return WeightVector(std::move(v), w_source_, controls_per_case_, normalized_);
}

WeightVector compute_observation_weights(const Cohort& cohort, double w, bool normalize)
{
    const auto* cond = std::get_if<ConditionalOnExposure>(&cohort.design());
    if (cond == nullptr) {
        throw std::invalid_argument(
            "observation weights apply to exposure-conditional cohorts; random samples use uniform_weights");
    }
    if (!(w > 0.0 && w < 1.0)) throw std::invalid_argument("w must lie strictly between 0 and 1");
    const double c = cond->controls_per_case;
    if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("controls per case must be positive");

    const double exposed_weight = w;
    const double control_weight = (1.0 - w) / c;
    const auto e = cohort.exposure();
    std::vector<double> values(e.size());
    double scale = 1.0;
    if (normalize && !e.empty()) {
        const double total = static_cast<double>(cohort.num_exposed()) * exposed_weight +
                             static_cast<double>(cohort.num_controls()) * control_weight;
        scale = static_cast<double>(e.size()) / total;
    }
    const double we = exposed_weight * scale;
    const double wc = control_weight * scale;
    for (std::size_t i = 0; i < e.size(); ++i) values[i] = e[i] == 1.0 ? we : wc;
    return WeightVector(std::move(values), w, c, normalize);
}

WeightVector uniform_weights(const Cohort& cohort) { return uniform_weights(cohort.size()); }

WeightVector uniform_weights(std::size_t n)
{
    return WeightVector(std::vector<double>(n, 1.0), std::nullopt, std::nullopt, true);
}

void LossFunction::validate() const
{
    if (!(clip_epsilon > 0.0 && clip_epsilon < 0.5)) {
        throw std::invalid_argument("clip epsilon must lie in (0, 0.5)");
    }
}

double clip_probability(double p, double eps) noexcept { return std::clamp(p, eps, 1.0 - eps); }

double weighted_log_likelihood(std::span<const double> probs, std::span<const double> exposure,
                               std::span<const double> weights, double clip_epsilon)
{
    if (probs.size() != exposure.size() || probs.size() != weights.size()) {
        throw std::invalid_argument("weighted_log_likelihood: length mismatch");
    }
    if (!(clip_epsilon > 0.0 && clip_epsilon < 0.5)) {
        throw std::invalid_argument("weighted_log_likelihood: clip epsilon must lie in (0, 0.5)");
    }
    double ll = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (!std::isfinite(probs[i])) {
            throw std::invalid_argument("weighted_log_likelihood: non-finite probability at row " + std::to_string(i));
        }
        const double p = clip_probability(probs[i], clip_epsilon);
        ll += weights[i] * (exposure[i] * std::log(p) + (1.0 - exposure[i]) * std::log1p(-p));
    }
    return ll;
}

double weighted_log_likelihood(std::span<const double> probs, std::span<const double> exposure,
                               const WeightVector& weights, double clip_epsilon)
{
    return weighted_log_likelihood(probs, exposure, weights.values(), clip_epsilon);
}

double weighted_mean_loss(const LossFunction& loss, std::span<const double> probs,
                          std::span<const double> exposure, std::span<const double> weights)
{
    loss.validate();
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) throw std::invalid_argument("weighted_mean_loss: weights sum to zero");
    if (loss.kind == LossKind::NegLogLikelihood) {
        return -weighted_log_likelihood(probs, exposure, weights, loss.clip_epsilon) / total;
    }
    if (probs.size() != exposure.size() || probs.size() != weights.size()) {
        throw std::invalid_argument("weighted_mean_loss: length mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double d = probs[i] - exposure[i];
        s += weights[i] * d * d;
    }
    return s / total;
}

double inverse_logit(double x)
{
    if (!std::isfinite(x)) throw std::invalid_argument("inverse_logit: non-finite input");
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double z = std::exp(x);
    return z / (1.0 + z);
}

double logit(double p)
{
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("logit: probability must lie in (0, 1)");
    return std::log(p / (1.0 - p));
}

} // namespace wps
