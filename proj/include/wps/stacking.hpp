#pragma once

// Observation-weighted super learner: out-of-fold base predictions, a
// simplex-constrained meta-weight solve, and a full-data refit.

#include "wps/core.hpp"
#include "wps/folds.hpp"
#include "wps/learners.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace wps {

// A base-learner failure inside the stacking loop, tagged with where it
// happened. fold is npos for the full-data refit.
class StackingError : public std::runtime_error {
public:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    StackingError(const std::string& what, std::size_t fold, std::string learner)
        : std::runtime_error(what), fold_(fold), learner_(std::move(learner)) {}
    std::size_t fold() const noexcept { return fold_; }
    const std::string& learner() const noexcept { return learner_; }

private:
    std::size_t fold_;
    std::string learner_;
};

struct CrossValidatedPredictions {
    Matrix z; // N x L, column l holds learner l's out-of-fold predictions
    std::vector<LearnerSpec> specs;
    FoldAssignment folds;
    // Audit trail: the rows each fold's models were trained on.
    std::vector<std::vector<std::size_t>> training_rows;
    std::vector<std::string> warnings;
};

struct StackingOptions {
    bool stratified = true;
    std::size_t jobs = 1; // fold x learner fits; 0 = all cores
};

CrossValidatedPredictions cross_validated_predictions(const Matrix& x, std::span<const double> exposure,
                                                      const WeightVector& weights,
                                                      const std::vector<LearnerSpec>& library,
                                                      const FoldAssignment& folds, std::size_t jobs = 1);
CrossValidatedPredictions cross_validated_predictions(const Cohort& cohort, const WeightVector& weights,
                                                      const std::vector<LearnerSpec>& library,
                                                      const FoldAssignment& folds, std::size_t jobs = 1);

struct MetaSolution {
    std::vector<double> alpha;
    double objective = 0.0; // weighted mean loss at alpha
    std::size_t iterations = 0;
    std::vector<std::size_t> zero_alpha; // learners with alpha exactly 0
    std::vector<std::string> warnings;
};

// argmin over the simplex of the weighted mean loss of z * alpha.
// NegLogLikelihood: exponentiated gradient from the uniform vector.
// SquaredError: weighted non-negative least squares, then normalized.
MetaSolution solve_meta_weights(const Matrix& z, std::span<const double> exposure, std::span<const double> weights,
                                const LossFunction& loss);

struct EnsembleFit {
    std::vector<double> alpha;
    std::vector<PropensityModel> base_models;
    LossFunction meta_loss;
    std::vector<double> cv_loss;  // per learner, weighted mean loss of its Z column
    double ensemble_cv_loss = 0.0; // meta objective at alpha
    std::vector<std::size_t> zero_alpha;
    std::vector<std::string> warnings;
    CrossValidatedPredictions cv;
};

// Seeds of the library members as fit_super_learner assigns them.
std::vector<LearnerSpec> seeded_library(const std::vector<LearnerSpec>& library, std::uint64_t seed);
std::uint64_t fold_seed(std::uint64_t seed) noexcept;

EnsembleFit fit_super_learner(const Matrix& x, std::span<const double> exposure, const WeightVector& weights,
                              const std::vector<LearnerSpec>& library, std::size_t k, const LossFunction& loss,
                              std::uint64_t seed, const StackingOptions& options = {});
EnsembleFit fit_super_learner(const Cohort& cohort, const WeightVector& weights,
                              const std::vector<LearnerSpec>& library, std::size_t k, const LossFunction& loss,
                              std::uint64_t seed, const StackingOptions& options = {});

// sum_l alpha_l * predict(base_models[l], x).
std::vector<double> predict_ensemble(const EnsembleFit& fit, const Matrix& x);

struct ExternalCvResult {
    std::vector<double> predictions; // out-of-fold ensemble predictions, one per row
    FoldAssignment outer_folds;
    std::vector<std::vector<double>> fold_alpha;
    std::vector<double> fold_loss; // weighted mean loss on each held-out fold
    double loss = 0.0;             // weighted mean loss over all rows
};

// Runs the whole stacking procedure on each outer fold complement and
// predicts the held-out fold.
ExternalCvResult external_cv_super_learner(const Cohort& cohort, const WeightVector& weights,
                                           const std::vector<LearnerSpec>& library, std::size_t k_outer,
                                           std::size_t k_inner, const LossFunction& loss, std::uint64_t seed,
                                           const StackingOptions& options = {});

} // namespace wps
