#include "wps/learners.hpp"

#include "linalg.hpp"
#include "wps/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace wps {

void LogisticModel::predict(const Matrix& x, std::span<double> out) const
{
    kernels::gemv(x.data(), x.rows(), x.cols(), coefficients, intercept, out);
    for (double& v : out) v = inverse_logit(v);
}

namespace {

struct IrlsResult {
    std::vector<double> beta; // intercept first
    std::size_t iterations = 0;
    bool converged = false;
};

// Penalized (ridge >= 0) weighted log-likelihood at beta.
double objective(const TrainingSet& d, std::span<const double> beta, double ridge, std::vector<double>& eta)
{
    const std::size_t p = d.num_covariates();
    kernels::gemv(d.x.data(), d.size(), p, beta.subspan(1), beta[0], eta);
    double ll = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        // log(1 + exp(eta)) without overflow
        const double softplus = eta[i] > 0 ? eta[i] + std::log1p(std::exp(-eta[i])) : std::log1p(std::exp(eta[i]));
        ll += d.w[i] * (d.e[i] * eta[i] - softplus);
    }
    double pen = 0.0;
    for (double b : beta) pen += b * b;
    return ll - 0.5 * ridge * pen;
}

IrlsResult irls(const TrainingSet& d, double ridge, std::size_t max_iter, double tol)
{
    const std::size_t p = d.num_covariates();
    const std::size_t q = p + 1;
    const std::size_t n = d.size();

    IrlsResult res;
    res.beta.assign(q, 0.0);
    const double ebar = kernels::weighted_sum(d.w, d.e) / d.total_weight();
    res.beta[0] = std::log(std::clamp(ebar, 1e-8, 1 - 1e-8) / (1 - std::clamp(ebar, 1e-8, 1 - 1e-8)));

    std::vector<double> eta(n), trial_eta(n), hess(q * q), grad(q), row(q);
    double current = objective(d, res.beta, ridge, eta);

    for (res.iterations = 1; res.iterations <= max_iter; ++res.iterations) {
        std::fill(hess.begin(), hess.end(), 0.0);
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double mu = inverse_logit(eta[i]);
            const double wi = d.w[i] * mu * (1.0 - mu);
            const double ri = d.w[i] * (d.e[i] - mu);
            row[0] = 1.0;
            const auto xi = d.x.row(i);
            std::copy(xi.begin(), xi.end(), row.begin() + 1);
            kernels::axpy(ri, row, grad);
            for (std::size_t j = 0; j < q; ++j) {
                kernels::axpy(wi * row[j], std::span<const double>(row).subspan(0, j + 1),
                              std::span<double>(hess).subspan(j * q, j + 1));
            }
        }
        for (std::size_t j = 0; j < q; ++j) {
            grad[j] -= ridge * res.beta[j];
            hess[j * q + j] += ridge;
            for (std::size_t k = 0; k < j; ++k) hess[k * q + j] = hess[j * q + k];
        }
        auto step = detail::cholesky_solve(hess, grad, q);
        if (!step) return res; // singular; caller retries with ridge

        // Halve the Newton step until the objective does not decrease.
        double scale = 1.0;
        std::vector<double> trial(q);
        double value = current;
        for (int halvings = 0; halvings < 40; ++halvings) {
            for (std::size_t j = 0; j < q; ++j) trial[j] = res.beta[j] + scale * (*step)[j];
            value = objective(d, trial, ridge, trial_eta);
            if (value >= current - 1e-12 * std::fabs(current)) break;
            scale *= 0.5;
        }
        double change = 0.0;
        for (std::size_t j = 0; j < q; ++j) change = std::max(change, std::fabs(trial[j] - res.beta[j]));
        res.beta = trial;
        eta.swap(trial_eta);
        current = value;
        if (change < tol) {
            res.converged = true;
            return res;
        }
    }
    res.iterations = max_iter;
    return res;
}

} // namespace

PropensityModel fit_logistic(const TrainingSet& data, const LearnerSpec& spec)
{
    validate_training_set(data);
    const std::size_t p = data.num_covariates();
    const TrainingSet d = collapse_duplicates(data);
    const auto max_iter = static_cast<std::size_t>(spec.get("max_iter"));
    const double tol = spec.get("tol");

    TrainingMetadata meta{data.size(), p, data.total_weight(), {}, {}};
    IrlsResult res = irls(d, 0.0, max_iter, tol);
    bool ridge_used = false;
    if (!res.converged) {
        // Separation or a singular design: refit with a tiny ridge term.
        ridge_used = true;
        meta.warnings.push_back("logistic: singular or separated design, ridge " + std::to_string(spec.get("ridge")) +
                                " applied");
        res = irls(d, spec.get("ridge"), max_iter, tol);
        if (!res.converged) {
            throw ConvergenceError("logistic: IRLS did not converge in " + std::to_string(max_iter) + " iterations",
                                   res.beta);
        }
    }

    auto model = std::make_shared<LogisticModel>();
    model->intercept = res.beta[0];
    model->coefficients.assign(res.beta.begin() + 1, res.beta.end());
    model->iterations = res.iterations;
    model->ridge_used = ridge_used;
    return PropensityModel(spec, std::move(model), std::move(meta));
}

} // namespace wps
