#include "wps/learners.hpp"

#include "wps/folds.hpp"
#include "wps/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wps {

void LassoModel::predict(const Matrix& x, std::span<double> out) const
{
    kernels::gemv(x.data(), x.rows(), x.cols(), coefficients, intercept, out);
    for (double& v : out) v = inverse_logit(v);
}

namespace lasso {

std::vector<double> lambda_path(double lambda_max, std::size_t count, double min_ratio)
{
    std::vector<double> path(count);
    if (count == 1) {
        path[0] = lambda_max;
        return path;
    }
    const double log_ratio = std::log(min_ratio);
    for (std::size_t k = 0; k < count; ++k) {
        path[k] = lambda_max * std::exp(log_ratio * static_cast<double>(k) / static_cast<double>(count - 1));
    }
    return path;
}

namespace {

constexpr double kMuClip = 1e-5;

// Standardized, column-major copy of the active covariates with weights
// normalized to sum to one.
struct Standardized {
    std::size_t n = 0;
    std::vector<std::size_t> active; // original column index per standardized column
    std::vector<std::size_t> dropped;
    std::vector<double> mean, scale;
    std::vector<std::vector<double>> z; // column-major
    std::vector<double> v;              // normalized weights
    std::vector<double> e;
};

Standardized standardize(const TrainingSet& d)
{
    Standardized s;
    s.n = d.size();
    const double total = d.total_weight();
    s.v.resize(s.n);
    for (std::size_t i = 0; i < s.n; ++i) s.v[i] = d.w[i] / total;
    s.e = d.e;
    for (std::size_t j = 0; j < d.num_covariates(); ++j) {
        double mu = 0.0;
        for (std::size_t i = 0; i < s.n; ++i) mu += s.v[i] * d.x(i, j);
        double var = 0.0;
        for (std::size_t i = 0; i < s.n; ++i) var += s.v[i] * (d.x(i, j) - mu) * (d.x(i, j) - mu);
        if (!(var > 1e-14 * std::max(1.0, mu * mu))) {
            s.dropped.push_back(j);
            continue;
        }
        const double sd = std::sqrt(var);
        std::vector<double> col(s.n);
        for (std::size_t i = 0; i < s.n; ++i) col[i] = (d.x(i, j) - mu) / sd;
        s.active.push_back(j);
        s.mean.push_back(mu);
        s.scale.push_back(sd);
        s.z.push_back(std::move(col));
    }
    return s;
}

double soft_threshold(double x, double t)
{
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

double compute_lambda_max(const Standardized& s)
{
    const double ebar = kernels::weighted_sum(s.v, s.e);
    double lmax = 0.0;
    std::vector<double> r(s.n);
    for (std::size_t i = 0; i < s.n; ++i) r[i] = s.v[i] * (s.e[i] - ebar);
    for (const auto& col : s.z) lmax = std::max(lmax, std::fabs(kernels::dot(col, r)));
    return lmax;
}

struct Solver {
    const Standardized& s;
    double tol;
    std::size_t max_passes;
    std::size_t max_irls;

    double b0 = 0.0;
    std::vector<double> beta;
    std::vector<double> eta;

    explicit Solver(const Standardized& st, double t, std::size_t passes, std::size_t irls)
        : s(st), tol(t), max_passes(passes), max_irls(irls), beta(st.z.size(), 0.0), eta(st.n, 0.0)
    {
        const double ebar = std::clamp(kernels::weighted_sum(s.v, s.e), kMuClip, 1 - kMuClip);
        b0 = std::log(ebar / (1 - ebar));
        std::fill(eta.begin(), eta.end(), b0);
    }

    void solve(double lambda)
    {
        const std::size_t n = s.n;
        const std::size_t p = beta.size();
        std::vector<double> u(n), res(n), xsq(p);
        std::vector<std::vector<double>> uz(p, std::vector<double>(n));
        for (std::size_t outer = 0; outer < max_irls; ++outer) {
            // Quadratic approximation at the current eta.
            for (std::size_t i = 0; i < n; ++i) {
                const double mu = std::clamp(inverse_logit(eta[i]), kMuClip, 1 - kMuClip);
                const double var = mu * (1 - mu);
                u[i] = s.v[i] * var;
                res[i] = (s.e[i] - mu) / var; // working residual: z_work - eta
            }
            for (std::size_t j = 0; j < p; ++j) {
                for (std::size_t i = 0; i < n; ++i) uz[j][i] = u[i] * s.z[j][i];
                xsq[j] = kernels::dot(uz[j], s.z[j]);
            }
            const double usum = std::accumulate(u.begin(), u.end(), 0.0);
            const std::vector<double> beta_start = beta;
            const double b0_start = b0;

            for (std::size_t pass = 0; pass < max_passes; ++pass) {
                double max_delta = 0.0;
                // Intercept (unpenalized).
                {
                    const double delta = kernels::weighted_sum(u, res) / usum;
                    b0 += delta;
                    for (std::size_t i = 0; i < n; ++i) res[i] -= delta;
                    max_delta = std::max(max_delta, usum * delta * delta);
                }
                for (std::size_t j = 0; j < p; ++j) {
                    if (xsq[j] <= 0.0) continue;
                    const auto& zj = s.z[j];
                    const double g = kernels::dot(uz[j], res);
                    const double old = beta[j];
                    const double updated = soft_threshold(g + xsq[j] * old, lambda) / xsq[j];
                    const double delta = updated - old;
                    if (delta != 0.0) {
                        beta[j] = updated;
                        kernels::axpy(-delta, zj, res);
                        max_delta = std::max(max_delta, xsq[j] * delta * delta);
                    }
                }
                if (max_delta < tol * tol) break;
            }

            double change = std::fabs(b0 - b0_start);
            for (std::size_t j = 0; j < p; ++j) change = std::max(change, std::fabs(beta[j] - beta_start[j]));
            std::fill(eta.begin(), eta.end(), b0);
            for (std::size_t j = 0; j < p; ++j) kernels::axpy(beta[j], s.z[j], eta);
            if (change < 10 * tol) break;
        }
    }
};

struct OriginalScale {
    double intercept;
    std::vector<double> coefficients;
};

OriginalScale to_original(const Standardized& s, double b0, std::span<const double> beta, std::size_t p)
{
    OriginalScale o{b0, std::vector<double>(p, 0.0)};
    for (std::size_t k = 0; k < s.active.size(); ++k) {
        const double b = beta[k] / s.scale[k];
        o.coefficients[s.active[k]] = b;
        o.intercept -= b * s.mean[k];
    }
    return o;
}

} // namespace

namespace {

// d must already be collapsed.
PathFit solve_collapsed(const TrainingSet& d, const LearnerSpec& spec, std::vector<double> lambdas)
{
    const Standardized s = standardize(d);
    const double lambda_max = compute_lambda_max(s);
    if (lambdas.empty()) {
        lambdas = lambda_path(lambda_max, static_cast<std::size_t>(spec.get("n_lambda")), spec.get("lambda_min_ratio"));
    }
    Solver solver(s, spec.get("tol"), static_cast<std::size_t>(spec.get("max_passes")),
                  static_cast<std::size_t>(spec.get("max_irls")));
    PathFit fit;
    fit.lambdas = lambdas;
    fit.dropped_columns = s.dropped;
    for (double lambda : lambdas) {
        if (lambda >= lambda_max) {
            // At or above lambda_max the intercept-only fit satisfies the KKT
            // conditions exactly.
            std::fill(solver.beta.begin(), solver.beta.end(), 0.0);
            const double ebar = std::clamp(kernels::weighted_sum(s.v, s.e), kMuClip, 1 - kMuClip);
            solver.b0 = std::log(ebar / (1 - ebar));
            std::fill(solver.eta.begin(), solver.eta.end(), solver.b0);
        } else {
            solver.solve(lambda);
        }
        OriginalScale o = to_original(s, solver.b0, solver.beta, d.num_covariates());
        fit.intercepts.push_back(o.intercept);
        fit.coefficients.push_back(std::move(o.coefficients));
    }
    return fit;
}

} // namespace

PathFit solve_path(const TrainingSet& data, const LearnerSpec& spec, std::vector<double> lambdas)
{
    validate_training_set(data);
    return solve_collapsed(collapse_duplicates(data), spec, std::move(lambdas));
}

} // namespace lasso

PropensityModel fit_lasso(const TrainingSet& data, const LearnerSpec& spec)
{
    validate_training_set(data);
    if (data.size() < 20) throw std::invalid_argument("lasso: need at least 20 rows for lambda selection");
    const std::size_t p = data.num_covariates();
    TrainingMetadata meta{data.size(), p, data.total_weight(), {}, {}};

    auto model = std::make_shared<LassoModel>();
    const double fixed_lambda = spec.get("lambda");
    if (fixed_lambda > 0.0) {
        const lasso::PathFit fit = lasso::solve_path(data, spec, {fixed_lambda});
        model->intercept = fit.intercepts[0];
        model->coefficients = fit.coefficients[0];
        model->lambda = fixed_lambda;
        model->lambda_path = fit.lambdas;
        model->dropped_columns = fit.dropped_columns;
    } else {
        const lasso::PathFit full = lasso::solve_path(data, spec);
        const std::size_t n_lambda = full.lambdas.size();
        const auto k = static_cast<std::size_t>(spec.get("cv_folds"));

        std::size_t n1 = 0;
        for (double e : data.e) n1 += e == 1.0 ? 1 : 0;
        const bool stratify = n1 >= k && data.size() - n1 >= k;
        const FoldAssignment folds = make_cv_folds(data.e, k, mix_seed(spec.seed, 0x1A550), stratify);

        // Fold training sets are built from one grouping of the full data;
        // summing the weights of each group over the fold's rows reproduces
        // collapse_duplicates on that fold exactly.
        std::size_t n_groups = 0;
        const std::vector<std::size_t> group = group_duplicates(data, n_groups);
        const TrainingSet units = collapse_duplicates(data);

        std::vector<double> cv_loss(n_lambda, 0.0);
        std::vector<double> eta;
        for (std::size_t f = 0; f < k; ++f) {
            std::vector<double> train_w(n_groups, 0.0), test_w(n_groups, 0.0);
            for (std::size_t i = 0; i < data.size(); ++i) {
                (folds.fold_of[i] == f ? test_w : train_w)[group[i]] += data.w[i];
            }
            std::vector<std::size_t> train_rows, test_rows;
            for (std::size_t g = 0; g < n_groups; ++g) {
                if (train_w[g] > 0.0) train_rows.push_back(g);
                if (test_w[g] > 0.0) test_rows.push_back(g);
            }
            TrainingSet train{units.x.select_rows(train_rows), {}, {}};
            for (std::size_t g : train_rows) {
                train.e.push_back(units.e[g]);
                train.w.push_back(train_w[g]);
            }
            bool any0 = false, any1 = false;
            for (double e : train.e) (e == 1.0 ? any1 : any0) = true;
            // A single-class training fold adds nothing to any path point.
            if (!(any0 && any1)) continue;
            const lasso::PathFit fold_fit = lasso::solve_collapsed(train, spec, full.lambdas);

            const Matrix xt = units.x.select_rows(test_rows);
            eta.resize(test_rows.size());
            for (std::size_t l = 0; l < n_lambda; ++l) {
                kernels::gemv(xt.data(), xt.rows(), xt.cols(), fold_fit.coefficients[l], fold_fit.intercepts[l], eta);
                for (std::size_t t = 0; t < test_rows.size(); ++t) {
                    const double pr = clip_probability(inverse_logit(eta[t]), kDefaultClip);
                    const std::size_t g = test_rows[t];
                    cv_loss[l] -= test_w[g] * (units.e[g] == 1.0 ? std::log(pr) : std::log1p(-pr));
                }
            }
        }
        const double total = data.total_weight();
        for (double& c : cv_loss) c /= total;
        const auto best = static_cast<std::size_t>(std::min_element(cv_loss.begin(), cv_loss.end()) - cv_loss.begin());

        model->intercept = full.intercepts[best];
        model->coefficients = full.coefficients[best];
        model->lambda = full.lambdas[best];
        model->lambda_path = full.lambdas;
        model->cv_loss = std::move(cv_loss);
        model->dropped_columns = full.dropped_columns;
    }
    for (std::size_t j : model->dropped_columns) {
        meta.warnings.push_back("lasso: dropped constant covariate column " + std::to_string(j));
    }
    return PropensityModel(spec, std::move(model), std::move(meta));
}

} // namespace wps
