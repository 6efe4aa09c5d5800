#include "wps/kernels.hpp"
#include "wps/stacking.hpp"

#include "../learners/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wps {

namespace {

constexpr std::size_t kMaxIterations = 10000;
constexpr double kObjectiveTol = 1e-10;

struct Problem {
    const Matrix& z;
    std::span<const double> e;
    std::span<const double> w;
    double total;
    double eps;
};

void combine(const Matrix& z, std::span<const double> alpha, std::vector<double>& p)
{
    p.resize(z.rows());
    kernels::gemv(z.data(), z.rows(), z.cols(), alpha, 0.0, p);
}

double nll(const Problem& pr, std::span<const double> alpha, std::vector<double>& p)
{
    combine(pr.z, alpha, p);
    return -weighted_log_likelihood(p, pr.e, pr.w, pr.eps) / pr.total;
}

void nll_gradient(const Problem& pr, const std::vector<double>& p, std::vector<double>& g)
{
    const std::size_t n = pr.z.rows();
    const std::size_t l = pr.z.cols();
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double q = clip_probability(p[i], pr.eps);
        r[i] = -pr.w[i] * (pr.e[i] / q - (1.0 - pr.e[i]) / (1.0 - q)) / pr.total;
    }
    g.assign(l, 0.0);
    for (std::size_t i = 0; i < n; ++i) kernels::axpy(r[i], pr.z.row(i), g);
}

std::vector<double> exponentiated_gradient(const Problem& pr, std::size_t& iterations)
{
    const std::size_t l = pr.z.cols();
    std::vector<double> alpha(l, 1.0 / static_cast<double>(l));
    std::vector<double> p, p_new, g, trial(l);
    double f = nll(pr, alpha, p);
    double eta = 1.0;
    for (iterations = 0; iterations < kMaxIterations; ++iterations) {
        nll_gradient(pr, p, g);
        const double gmin = *std::min_element(g.begin(), g.end());
        double sum = 0.0;
        for (std::size_t j = 0; j < l; ++j) {
            trial[j] = alpha[j] * std::exp(-eta * (g[j] - gmin));
            sum += trial[j];
        }
        for (double& a : trial) a /= sum;
        const double f_new = nll(pr, trial, p_new);
        if (f_new < f) {
            const double gain = f - f_new;
            alpha = trial;
            p.swap(p_new);
            f = f_new;
            eta *= 2.0;
            if (gain < kObjectiveTol) break;
        } else {
            eta *= 0.5;
            if (eta < 1e-30) break;
        }
    }
    return alpha;
}

// Lawson-Hanson active set on the normal equations G x = b.
std::vector<double> nnls(const std::vector<double>& gram, const std::vector<double>& b, std::size_t l)
{
    std::vector<double> x(l, 0.0);
    std::vector<bool> passive(l, false);
    double scale = 0.0;
    for (std::size_t j = 0; j < l; ++j) scale = std::max(scale, gram[j * l + j]);
    const double tol = 1e-12 * std::max(scale, 1e-300);

    auto solve_passive = [&](std::vector<double>& s) {
        std::vector<std::size_t> idx;
        for (std::size_t j = 0; j < l; ++j) {
            if (passive[j]) idx.push_back(j);
        }
        const std::size_t m = idx.size();
        std::vector<double> a(m * m), rhs(m);
        for (std::size_t r = 0; r < m; ++r) {
            rhs[r] = b[idx[r]];
            for (std::size_t c = 0; c < m; ++c) a[r * m + c] = gram[idx[r] * l + idx[c]];
        }
        const auto sol = detail::cholesky_solve(a, rhs, m);
        if (!sol) return false;
        s.assign(l, 0.0);
        for (std::size_t r = 0; r < m; ++r) s[idx[r]] = (*sol)[r];
        return true;
    };

    for (std::size_t outer = 0; outer < 3 * l + 10; ++outer) {
        std::vector<double> grad(b);
        for (std::size_t j = 0; j < l; ++j) {
            for (std::size_t k = 0; k < l; ++k) grad[j] -= gram[j * l + k] * x[k];
        }
        std::size_t best = l;
        double best_val = tol;
        for (std::size_t j = 0; j < l; ++j) {
            if (!passive[j] && grad[j] > best_val) {
                best_val = grad[j];
                best = j;
            }
        }
        if (best == l) break;
        passive[best] = true;

        for (std::size_t inner = 0; inner < 3 * l + 10; ++inner) {
            std::vector<double> s;
            if (!solve_passive(s)) {
                // Collinear with the passive set; it cannot improve the fit.
                passive[best] = false;
                return x;
            }
            bool feasible = true;
            for (std::size_t j = 0; j < l; ++j) {
                if (passive[j] && s[j] <= 0.0) feasible = false;
            }
            if (feasible) {
                x = s;
                break;
            }
            double step = 1.0;
            for (std::size_t j = 0; j < l; ++j) {
                if (passive[j] && s[j] <= 0.0) step = std::min(step, x[j] / (x[j] - s[j]));
            }
            for (std::size_t j = 0; j < l; ++j) {
                x[j] += step * (s[j] - x[j]);
                if (passive[j] && x[j] <= 1e-15) {
                    passive[j] = false;
                    x[j] = 0.0;
                }
            }
        }
    }
    return x;
}

double squared_error(const Problem& pr, std::span<const double> alpha)
{
    std::vector<double> p;
    combine(pr.z, alpha, p);
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += pr.w[i] * (pr.e[i] - p[i]) * (pr.e[i] - p[i]);
    return s / pr.total;
}

} // namespace

MetaSolution solve_meta_weights(const Matrix& z, std::span<const double> exposure, std::span<const double> weights,
                                const LossFunction& loss)
{
    loss.validate();
    const std::size_t n = z.rows();
    const std::size_t l = z.cols();
    if (l == 0) throw std::invalid_argument("meta weights: no learner columns");
    if (exposure.size() != n || weights.size() != n) throw std::invalid_argument("meta weights: length mismatch");
    for (double v : z.data()) {
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("meta weights: predictions must lie in [0, 1]");
    }
    const Problem pr{z, exposure, weights, std::accumulate(weights.begin(), weights.end(), 0.0), loss.clip_epsilon};

    MetaSolution sol;
    if (l == 1) {
        sol.alpha = {1.0};
    } else if (loss.kind == LossKind::NegLogLikelihood) {
        sol.alpha = exponentiated_gradient(pr, sol.iterations);
        // Exponentiated steps never reach the boundary exactly; snap
        // negligible weights to zero.
        for (double& a : sol.alpha) {
            if (a < 1e-10) a = 0.0;
        }
        double s = std::accumulate(sol.alpha.begin(), sol.alpha.end(), 0.0);
        for (double& a : sol.alpha) a /= s;
        // A vertex that beats the iterate means the optimum sits there.
        std::vector<double> p;
        double f = nll(pr, sol.alpha, p);
        std::vector<double> vertex(l, 0.0);
        for (std::size_t j = 0; j < l; ++j) {
            vertex[j] = 1.0;
            const double fv = nll(pr, vertex, p);
            if (fv < f) {
                f = fv;
                sol.alpha = vertex;
            }
            vertex[j] = 0.0;
        }
    } else {
        std::vector<double> gram(l * l, 0.0), b(l, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = z.row(i);
            for (std::size_t j = 0; j < l; ++j) {
                b[j] += weights[i] * row[j] * exposure[i];
                for (std::size_t k = 0; k < l; ++k) gram[j * l + k] += weights[i] * row[j] * row[k];
            }
        }
        sol.alpha = nnls(gram, b, l);
        const double s = std::accumulate(sol.alpha.begin(), sol.alpha.end(), 0.0);
        if (!(s > 0.0)) {
            sol.alpha.assign(l, 1.0 / static_cast<double>(l));
            sol.warnings.push_back("meta weights: non-negative least squares returned all zeros; using uniform weights");
        } else {
            for (double& a : sol.alpha) a /= s;
        }
    }

    for (std::size_t j = 0; j < l; ++j) {
        if (sol.alpha[j] == 0.0) sol.zero_alpha.push_back(j);
    }
    std::vector<double> p;
    sol.objective = loss.kind == LossKind::NegLogLikelihood ? nll(pr, sol.alpha, p) : squared_error(pr, sol.alpha);
    return sol;
}

} // namespace wps
