#pragma once

// Observation-weighted base learners. Each fit maximizes (or, for the tree
// family, greedily optimizes) a weighted objective and returns a
// PropensityModel whose predictions lie in [0, 1].

#include "wps/core.hpp"
#include "wps/rng.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wps {

// Owning (X, E, w) triple that every learner consumes.
struct TrainingSet {
    Matrix x;
    std::vector<double> e;
    std::vector<double> w;

    std::size_t size() const noexcept { return e.size(); }
    std::size_t num_covariates() const noexcept { return x.cols(); }
    double total_weight() const noexcept;
};

TrainingSet make_training_set(const Cohort& cohort, const WeightVector& weights);
TrainingSet make_training_set(const Matrix& x, std::span<const double> e, std::span<const double> w);

// Rows with identical (x, e) merged into one row carrying the summed weight,
// in lexicographic (x, e) order. Any objective that is a weighted sum over
// rows is unchanged by this.
TrainingSet collapse_duplicates(const TrainingSet& data);

// Group id of each row under the same (x, e) ordering collapse_duplicates
// uses; n_groups receives the number of distinct rows.
std::vector<std::size_t> group_duplicates(const TrainingSet& data, std::size_t& n_groups);

// Throws std::invalid_argument on empty data, mismatched lengths, non-binary
// exposure, non-positive weights, or a single exposure class.
void validate_training_set(const TrainingSet& data);

enum class LearnerKind { Logistic, Lasso, Tree, Forest, NeuralNet };

std::string_view learner_kind_name(LearnerKind kind) noexcept;

struct LearnerSpec {
    LearnerKind kind = LearnerKind::Logistic;
    std::map<std::string, double> hyperparameters;
    std::uint64_t seed = 0;
    std::string label;

    // Spec with every hyperparameter set to its default, then overridden.
    // Unknown hyperparameter names and out-of-range values throw.
    static LearnerSpec make(LearnerKind kind, std::map<std::string, double> overrides = {},
                            std::uint64_t seed = 0, std::string label = {});

    double get(const std::string& name) const;
    bool has(const std::string& name) const { return hyperparameters.count(name) != 0; }
    void validate() const;
    LearnerSpec with_seed(std::uint64_t s) const;
};

// Learner names accepted by parse_learner: logistic, lasso, tree, forest,
// nnet<k> (hidden size k).
LearnerSpec parse_learner(std::string_view name);

// forest, tree, logistic, lasso, nnet2, nnet3, nnet5.
std::vector<LearnerSpec> default_library();
// logistic, lasso, tree.
std::vector<LearnerSpec> reduced_library();

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, std::vector<double> last_iterate)
        : std::runtime_error(what), last_iterate_(std::move(last_iterate)) {}
    const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }

private:
    std::vector<double> last_iterate_;
};

// ---- fitted model representations -----------------------------------------

struct ModelImpl {
    virtual ~ModelImpl() = default;
    virtual void predict(const Matrix& x, std::span<double> out) const = 0;
};

struct LogisticModel final : ModelImpl {
    double intercept = 0.0;
    std::vector<double> coefficients;
    std::size_t iterations = 0;
    bool ridge_used = false;
    void predict(const Matrix& x, std::span<double> out) const override;
};

struct LassoModel final : ModelImpl {
    double intercept = 0.0;
    std::vector<double> coefficients; // original covariate scale, zero for dropped columns
    double lambda = 0.0;
    std::vector<double> lambda_path;
    std::vector<double> cv_loss; // per path point; empty when lambda was fixed
    std::vector<std::size_t> dropped_columns;
    void predict(const Matrix& x, std::span<double> out) const override;
};

struct TreeNode {
    // Leaf when feature < 0.
    int feature = -1;
    double threshold = 0.0; // rows with x[feature] <= threshold go left
    int left = -1;
    int right = -1;
    double value = 0.0; // weighted exposure proportion in node
    double weight = 0.0;
};

struct TreeModel final : ModelImpl {
    std::vector<TreeNode> nodes;
    double predict_row(std::span<const double> x) const;
    std::size_t leaf_of(std::span<const double> x) const;
    std::size_t num_leaves() const;
    void predict(const Matrix& x, std::span<double> out) const override;
};

struct ForestModel final : ModelImpl {
    std::vector<TreeModel> trees;
    // Bootstrap multiplicity of each training row, per tree.
    std::vector<std::vector<std::uint32_t>> bootstrap_counts;
    void predict(const Matrix& x, std::span<double> out) const override;
};

struct NnetModel final : ModelImpl {
    std::size_t inputs = 0;
    std::size_t hidden = 0;
    // Layout: hidden x (inputs + 1) input weights (bias first in each row),
    // then hidden + 1 output weights (bias first).
    std::vector<double> params;
    std::size_t iterations = 0;
    bool converged = false;
    void predict(const Matrix& x, std::span<double> out) const override;
};

struct TrainingMetadata {
    std::size_t n = 0;
    std::size_t p = 0;
    double total_weight = 0.0;
    std::string weight_provenance;
    std::vector<std::string> warnings;
};

class PropensityModel {
public:
    PropensityModel(LearnerSpec spec, std::shared_ptr<const ModelImpl> impl, TrainingMetadata meta)
        : spec_(std::move(spec)), impl_(std::move(impl)), meta_(std::move(meta)) {}

    const LearnerSpec& spec() const noexcept { return spec_; }
    const TrainingMetadata& metadata() const noexcept { return meta_; }

    template <class T>
    const T* as() const noexcept { return dynamic_cast<const T*>(impl_.get()); }

    // Throws on column-count mismatch.
    std::vector<double> predict(const Matrix& x) const;

    PropensityModel with_metadata(TrainingMetadata meta) const { return {spec_, impl_, std::move(meta)}; }

private:
    LearnerSpec spec_;
    std::shared_ptr<const ModelImpl> impl_;
    TrainingMetadata meta_;
};

inline std::vector<double> predict(const PropensityModel& model, const Matrix& x) { return model.predict(x); }

// ---- fitting ----------------------------------------------------------------

PropensityModel fit_learner(const LearnerSpec& spec, const TrainingSet& data);

PropensityModel fit_logistic(const TrainingSet& data, const LearnerSpec& spec);
PropensityModel fit_lasso(const TrainingSet& data, const LearnerSpec& spec);
PropensityModel fit_tree(const TrainingSet& data, const LearnerSpec& spec);
PropensityModel fit_forest(const TrainingSet& data, const LearnerSpec& spec);
PropensityModel fit_nnet(const TrainingSet& data, const LearnerSpec& spec);

PropensityModel fit_weighted_logistic(const Cohort& cohort, const WeightVector& weights);
PropensityModel fit_weighted_lasso(const Cohort& cohort, const WeightVector& weights);
PropensityModel fit_weighted_tree(const Cohort& cohort, const WeightVector& weights);
PropensityModel fit_weighted_forest(const Cohort& cohort, const WeightVector& weights, const LearnerSpec& spec);
PropensityModel fit_weighted_nnet(const Cohort& cohort, const WeightVector& weights, const LearnerSpec& spec);

// ---- pieces exposed for testing ------------------------------------------------

namespace lasso {
// Decreasing log-spaced path from lambda_max to ratio * lambda_max.
std::vector<double> lambda_path(double lambda_max, std::size_t count, double min_ratio);

struct PathFit {
    std::vector<double> lambdas;
    std::vector<double> intercepts;             // original scale
    std::vector<std::vector<double>> coefficients; // original scale, all p columns
    std::vector<std::size_t> dropped_columns;
};
// Solves the weighted l1-penalized logistic problem along a path. When
// lambdas is empty the default path is generated from the data.
PathFit solve_path(const TrainingSet& data, const LearnerSpec& spec, std::vector<double> lambdas = {});
} // namespace lasso

namespace tree {
struct GrowOptions {
    double cp = 0.01;
    double min_split_weight = 20.0;
    double min_leaf_weight = 7.0;
    std::size_t max_depth = 30;
    std::size_t mtry = 0; // 0 = consider every covariate
};
// Grows a weighted-Gini tree. mtry > 0 draws that many candidate covariates
// per node from rng.
TreeModel grow(const TrainingSet& data, const GrowOptions& opt, RngStream* rng = nullptr);
} // namespace tree

namespace nnet {
// Objective sum_i w_i * crossentropy_i + decay * ||params||^2 and its
// gradient, for a single-hidden-layer logistic network.
double objective(const TrainingSet& data, std::size_t hidden, double decay, std::span<const double> params,
                 std::span<double> grad);
std::size_t param_count(std::size_t inputs, std::size_t hidden) noexcept;
} // namespace nnet

} // namespace wps
