#include "wps/parallel.hpp"
#include "wps/stacking.hpp"

namespace wps {

CrossValidatedPredictions cross_validated_predictions(const Matrix& x, std::span<const double> exposure,
                                                      const WeightVector& weights,
                                                      const std::vector<LearnerSpec>& library,
                                                      const FoldAssignment& folds, std::size_t jobs)
{
    const std::size_t n = exposure.size();
    const std::size_t n_learners = library.size();
    if (n_learners == 0) throw std::invalid_argument("cross-validation: learner library is empty");
    if (x.rows() != n || weights.size() != n || folds.fold_of.size() != n) {
        throw std::invalid_argument("cross-validation: row counts of covariates, exposure, weights and folds differ");
    }

    CrossValidatedPredictions out;
    out.z = Matrix(n, n_learners);
    out.specs = library;
    out.folds = folds;
    out.training_rows.resize(folds.k);

    std::vector<std::vector<std::size_t>> held_out(folds.k);
    std::vector<TrainingSet> train(folds.k);
    std::vector<Matrix> test_x(folds.k);
    for (std::size_t f = 0; f < folds.k; ++f) {
        out.training_rows[f] = folds.rows_outside(f);
        held_out[f] = folds.rows_in(f);
        const auto& rows = out.training_rows[f];
        const WeightVector w = weights.subset(rows);
        std::vector<double> e;
        e.reserve(rows.size());
        for (std::size_t r : rows) e.push_back(exposure[r]);
        train[f] = make_training_set(x.select_rows(rows), e, w.values());
        test_x[f] = x.select_rows(held_out[f]);
    }

    // One job per (fold, learner); each writes a disjoint set of Z cells.
    std::vector<std::vector<std::string>> job_warnings(folds.k * n_learners);
    parallel_for(folds.k * n_learners, jobs, [&](std::size_t job) {
        const std::size_t f = job / n_learners;
        const std::size_t l = job % n_learners;
        const LearnerSpec spec = library[l].with_seed(mix_seed(library[l].seed, f + 1));
        try {
            const PropensityModel m = fit_learner(spec, train[f]);
            const std::vector<double> p = m.predict(test_x[f]);
            for (std::size_t t = 0; t < held_out[f].size(); ++t) out.z(held_out[f][t], l) = p[t];
            for (const auto& wmsg : m.metadata().warnings) {
                job_warnings[job].push_back("fold " + std::to_string(f + 1) + ", " + spec.label + ": " + wmsg);
            }
        } catch (const std::exception& ex) {
            throw StackingError("fold " + std::to_string(f + 1) + ", learner " + spec.label + ": " + ex.what(), f,
                                spec.label);
        }
    });
    for (auto& ws : job_warnings) out.warnings.insert(out.warnings.end(), ws.begin(), ws.end());
    return out;
}

CrossValidatedPredictions cross_validated_predictions(const Cohort& cohort, const WeightVector& weights,
                                                      const std::vector<LearnerSpec>& library,
                                                      const FoldAssignment& folds, std::size_t jobs)
{
    return cross_validated_predictions(cohort.covariates(), cohort.exposure(), weights, library, folds, jobs);
}

} // namespace wps
