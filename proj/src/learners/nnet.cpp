#include "wps/learners.hpp"

#include "wps/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace wps {

namespace nnet {

std::size_t param_count(std::size_t inputs, std::size_t hidden) noexcept
{
    return hidden * (inputs + 1) + hidden + 1;
}

namespace {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

// Forward pass over all rows; fills hidden activations (hidden x n) and
// output logits (n).
void forward(const Matrix& x, std::size_t hidden, std::span<const double> params, std::vector<double>& act,
             std::vector<double>& out_logit)
{
    const std::size_t n = x.rows();
    const std::size_t p = x.cols();
    act.resize(hidden * n);
    out_logit.assign(n, params[hidden * (p + 1)]);
    const std::size_t out_base = hidden * (p + 1);
    for (std::size_t k = 0; k < hidden; ++k) {
        const auto wk = params.subspan(k * (p + 1), p + 1);
        std::span<double> ak(act.data() + k * n, n);
        kernels::gemv(x.data(), n, p, wk.subspan(1), wk[0], ak);
        for (double& a : ak) a = sigmoid(a);
        kernels::axpy(params[out_base + 1 + k], ak, out_logit);
    }
}

} // namespace

double objective(const TrainingSet& data, std::size_t hidden, double decay, std::span<const double> params,
                 std::span<double> grad)
{
    const std::size_t n = data.size();
    const std::size_t p = data.num_covariates();
    if (params.size() != param_count(p, hidden)) throw std::invalid_argument("nnet: parameter vector has wrong size");
    const bool want_grad = !grad.empty();
    if (want_grad && grad.size() != params.size()) throw std::invalid_argument("nnet: gradient vector has wrong size");

    std::vector<double> act, logit;
    forward(data.x, hidden, params, act, logit);

    double value = 0.0;
    std::vector<double> delta(n);
    for (std::size_t i = 0; i < n; ++i) {
        // -[e log y + (1-e) log(1-y)] = softplus(o) - e o
        value += data.w[i] * (softplus(logit[i]) - data.e[i] * logit[i]);
        delta[i] = data.w[i] * (sigmoid(logit[i]) - data.e[i]);
    }
    double sq = 0.0;
    for (double v : params) sq += v * v;
    value += decay * sq;
    if (!want_grad) return value;

    const std::size_t out_base = hidden * (p + 1);
    std::vector<double> xt_col(n), dh(n);
    grad[out_base] = std::accumulate(delta.begin(), delta.end(), 0.0);
    for (std::size_t k = 0; k < hidden; ++k) {
        const std::span<const double> ak(act.data() + k * n, n);
        const double ck = params[out_base + 1 + k];
        grad[out_base + 1 + k] = kernels::dot(delta, ak);
        for (std::size_t i = 0; i < n; ++i) dh[i] = delta[i] * ck * ak[i] * (1.0 - ak[i]);
        grad[k * (p + 1)] = std::accumulate(dh.begin(), dh.end(), 0.0);
        for (std::size_t j = 0; j < p; ++j) {
            for (std::size_t i = 0; i < n; ++i) xt_col[i] = data.x(i, j);
            grad[k * (p + 1) + 1 + j] = kernels::dot(xt_col, dh);
        }
    }
    for (std::size_t m = 0; m < params.size(); ++m) grad[m] += 2.0 * decay * params[m];
    return value;
}

} // namespace nnet

void NnetModel::predict(const Matrix& x, std::span<double> out) const
{
    std::vector<double> act, logit;
    nnet::forward(x, hidden, params, act, logit);
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = nnet::sigmoid(logit[i]);
}

namespace {

struct LbfgsResult {
    std::vector<double> x;
    double value = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

// Limited-memory BFGS with Armijo backtracking. Returns the best iterate.
template <class F>
LbfgsResult lbfgs(F&& f, std::vector<double> x, std::size_t max_iter, double grad_tol, std::size_t memory = 10)
{
    const std::size_t m = x.size();
    std::vector<double> g(m), g_new(m), x_new(m), dir(m);
    double value = f(x, g);
    std::deque<std::vector<double>> s_hist, y_hist;
    std::deque<double> rho_hist;

    LbfgsResult res;
    auto max_abs = [](const std::vector<double>& v) {
        double a = 0.0;
        for (double e : v) a = std::max(a, std::fabs(e));
        return a;
    };

    for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
        if (max_abs(g) < grad_tol) {
            res.converged = true;
            break;
        }
        // Two-loop recursion.
        dir = g;
        std::vector<double> alpha(s_hist.size());
        for (std::size_t k = s_hist.size(); k-- > 0;) {
            alpha[k] = rho_hist[k] * kernels::dot(s_hist[k], dir);
            kernels::axpy(-alpha[k], y_hist[k], dir);
        }
        if (!s_hist.empty()) {
            const double gamma = kernels::dot(s_hist.back(), y_hist.back()) / kernels::dot(y_hist.back(), y_hist.back());
            for (double& d : dir) d *= gamma;
        } else {
            const double scale = 1.0 / std::max(1.0, max_abs(g));
            for (double& d : dir) d *= scale;
        }
        for (std::size_t k = 0; k < s_hist.size(); ++k) {
            const double beta = rho_hist[k] * kernels::dot(y_hist[k], dir);
            kernels::axpy(alpha[k] - beta, s_hist[k], dir);
        }
        for (double& d : dir) d = -d;

        double slope = kernels::dot(g, dir);
        if (!(slope < 0.0)) {
            // Not a descent direction; restart from steepest descent.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            const double scale = 1.0 / std::max(1.0, max_abs(g));
            for (std::size_t i = 0; i < m; ++i) dir[i] = -g[i] * scale;
            slope = kernels::dot(g, dir);
        }

        double step = 1.0;
        double value_new = value;
        bool accepted = false;
        for (int tries = 0; tries < 50; ++tries) {
            for (std::size_t i = 0; i < m; ++i) x_new[i] = x[i] + step * dir[i];
            value_new = f(x_new, g_new);
            if (std::isfinite(value_new) && value_new <= value + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        std::vector<double> s(m), y(m);
        for (std::size_t i = 0; i < m; ++i) {
            s[i] = x_new[i] - x[i];
            y[i] = g_new[i] - g[i];
        }
        const double sy = kernels::dot(s, y);
        if (sy > 1e-12 * std::sqrt(kernels::dot(s, s) * kernels::dot(y, y))) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (s_hist.size() > memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        const bool stalled = std::fabs(value - value_new) <= 1e-15 * std::max(1.0, std::fabs(value));
        x.swap(x_new);
        g.swap(g_new);
        value = value_new;
        if (stalled) break;
    }
    if (!res.converged && max_abs(g) < grad_tol) res.converged = true;
    res.x = std::move(x);
    res.value = value;
    return res;
}

} // namespace

PropensityModel fit_nnet(const TrainingSet& data, const LearnerSpec& spec)
{
    validate_training_set(data);
    const std::size_t p = data.num_covariates();
    const auto hidden = static_cast<std::size_t>(spec.get("hidden_size"));
    const double decay = spec.get("decay");
    const double range = spec.get("init_range");
    const TrainingSet d = collapse_duplicates(data);

    RngStream rng(spec.seed, 0x22E7);
    std::vector<double> init(nnet::param_count(p, hidden));
    for (double& v : init) v = (2.0 * rng.uniform() - 1.0) * range;

    auto f = [&](const std::vector<double>& x, std::vector<double>& g) { return nnet::objective(d, hidden, decay, x, g); };
    LbfgsResult res = lbfgs(f, std::move(init), static_cast<std::size_t>(spec.get("max_iter")), spec.get("grad_tol"));

    auto model = std::make_shared<NnetModel>();
    model->inputs = p;
    model->hidden = hidden;
    model->params = std::move(res.x);
    model->iterations = res.iterations;
    model->converged = res.converged;
    TrainingMetadata meta{data.size(), p, data.total_weight(), {}, {}};
    if (!res.converged) {
        meta.warnings.push_back("nnet: gradient tolerance not reached after " + std::to_string(res.iterations) +
                                " iterations; returning best iterate");
    }
    return PropensityModel(spec, std::move(model), std::move(meta));
}

} // namespace wps
