#include "wps/parallel.hpp"
#include "wps/stacking.hpp"

#include <algorithm>
#include <optional>

namespace wps {

std::vector<LearnerSpec> seeded_library(const std::vector<LearnerSpec>& library, std::uint64_t seed)
{
    std::vector<LearnerSpec> out;
    out.reserve(library.size());
    for (std::size_t l = 0; l < library.size(); ++l) out.push_back(library[l].with_seed(mix_seed(seed, 0x1EA0 + l)));
    return out;
}

std::uint64_t fold_seed(std::uint64_t seed) noexcept { return mix_seed(seed, 0xF0); }

EnsembleFit fit_super_learner(const Matrix& x, std::span<const double> exposure, const WeightVector& weights,
                              const std::vector<LearnerSpec>& library, std::size_t k, const LossFunction& loss,
                              std::uint64_t seed, const StackingOptions& options)
{
    loss.validate();
    if (library.empty()) throw std::invalid_argument("super learner: learner library is empty");
    const std::vector<LearnerSpec> lib = seeded_library(library, seed);
    const FoldAssignment folds = make_cv_folds(exposure, k, fold_seed(seed), options.stratified);

    EnsembleFit fit;
    fit.meta_loss = loss;
    fit.cv = cross_validated_predictions(x, exposure, weights, lib, folds, options.jobs);

    const std::size_t n_learners = lib.size();
    std::vector<double> column(x.rows());
    for (std::size_t l = 0; l < n_learners; ++l) {
        for (std::size_t i = 0; i < x.rows(); ++i) column[i] = fit.cv.z(i, l);
        fit.cv_loss.push_back(weighted_mean_loss(loss, column, exposure, weights.values()));
    }

    MetaSolution meta = solve_meta_weights(fit.cv.z, exposure, weights.values(), loss);
    fit.alpha = std::move(meta.alpha);
    fit.ensemble_cv_loss = meta.objective;
    fit.zero_alpha = std::move(meta.zero_alpha);
    fit.warnings = fit.cv.warnings;
    fit.warnings.insert(fit.warnings.end(), meta.warnings.begin(), meta.warnings.end());

    const TrainingSet full = make_training_set(x, exposure, weights.values());
    std::vector<std::optional<PropensityModel>> models(n_learners);
    parallel_for(n_learners, options.jobs, [&](std::size_t l) {
        try {
            models[l].emplace(fit_learner(lib[l], full));
        } catch (const std::exception& ex) {
            throw StackingError("full-data refit, learner " + lib[l].label + ": " + ex.what(), StackingError::npos,
                                lib[l].label);
        }
    });
    for (auto& m : models) {
        for (const auto& wmsg : m->metadata().warnings) fit.warnings.push_back(m->spec().label + ": " + wmsg);
        fit.base_models.push_back(std::move(*m));
    }
    return fit;
}

EnsembleFit fit_super_learner(const Cohort& cohort, const WeightVector& weights,
                              const std::vector<LearnerSpec>& library, std::size_t k, const LossFunction& loss,
                              std::uint64_t seed, const StackingOptions& options)
{
    return fit_super_learner(cohort.covariates(), cohort.exposure(), weights, library, k, loss, seed, options);
}

std::vector<double> predict_ensemble(const EnsembleFit& fit, const Matrix& x)
{
    if (fit.alpha.size() != fit.base_models.size()) throw std::invalid_argument("ensemble: alpha and models differ");
    std::vector<double> out(x.rows(), 0.0);
    for (std::size_t l = 0; l < fit.base_models.size(); ++l) {
        if (fit.alpha[l] == 0.0) {
            // Still validates the input shape.
            if (x.cols() != fit.base_models[l].metadata().p) {
                throw std::invalid_argument("ensemble: covariate count does not match the training data");
            }
            continue;
        }
        const std::vector<double> p = fit.base_models[l].predict(x);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += fit.alpha[l] * p[i];
    }
    for (double& v : out) v = std::clamp(v, 0.0, 1.0);
    return out;
}

ExternalCvResult external_cv_super_learner(const Cohort& cohort, const WeightVector& weights,
                                           const std::vector<LearnerSpec>& library, std::size_t k_outer,
                                           std::size_t k_inner, const LossFunction& loss, std::uint64_t seed,
                                           const StackingOptions& options)
{
    if (k_outer < 2) throw std::invalid_argument("external cross-validation needs at least 2 outer folds");
    const Matrix& x = cohort.covariates();
    const auto exposure = cohort.exposure();
    ExternalCvResult res;
    res.outer_folds = make_cv_folds(exposure, k_outer, mix_seed(seed, 0xE7), options.stratified);
    res.predictions.assign(cohort.size(), 0.0);
    for (std::size_t f = 0; f < k_outer; ++f) {
        const auto train_rows = res.outer_folds.rows_outside(f);
        const auto test_rows = res.outer_folds.rows_in(f);
        std::vector<double> e;
        for (std::size_t r : train_rows) e.push_back(exposure[r]);
        const EnsembleFit fit = fit_super_learner(x.select_rows(train_rows), e, weights.subset(train_rows), library,
                                                  k_inner, loss, mix_seed(seed, f + 1), options);
        const std::vector<double> p = predict_ensemble(fit, x.select_rows(test_rows));
        std::vector<double> te, tw;
        for (std::size_t t = 0; t < test_rows.size(); ++t) {
            res.predictions[test_rows[t]] = p[t];
            te.push_back(exposure[test_rows[t]]);
            tw.push_back(weights[test_rows[t]]);
        }
        res.fold_alpha.push_back(fit.alpha);
        res.fold_loss.push_back(weighted_mean_loss(loss, p, te, tw));
    }
    res.loss = weighted_mean_loss(loss, res.predictions, exposure, weights.values());
    return res;
}

} // namespace wps
