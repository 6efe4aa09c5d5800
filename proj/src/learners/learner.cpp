#include "wps/learners.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace wps {

namespace {

const std::map<std::string, double>& defaults_for(LearnerKind kind)
{
    static const std::map<std::string, double> logistic{{"max_iter", 100}, {"tol", 1e-8}, {"ridge", 1e-8}};
    static const std::map<std::string, double> lasso{
        {"n_lambda", 100}, {"lambda_min_ratio", 1e-3}, {"cv_folds", 10}, {"lambda", 0},
        {"tol", 1e-7},     {"max_passes", 1000},       {"max_irls", 100}};
    static const std::map<std::string, double> tree{
        {"cp", 0.01}, {"min_split_weight", 20}, {"min_leaf_weight", 7}, {"max_depth", 30}};
    static const std::map<std::string, double> forest{
        {"n_trees", 250}, {"mtry", 0}, {"min_leaf_size", 5}, {"max_depth", 30}};
    static const std::map<std::string, double> nnet{
        {"hidden_size", 2}, {"decay", 1e-4}, {"max_iter", 500}, {"grad_tol", 1e-6}, {"init_range", 0.5}};
    switch (kind) {
    case LearnerKind::Logistic: return logistic;
    case LearnerKind::Lasso: return lasso;
    case LearnerKind::Tree: return tree;
    case LearnerKind::Forest: return forest;
    case LearnerKind::NeuralNet: return nnet;
    }
    throw std::logic_error("unknown learner kind");
}

bool is_whole(double v) { return std::floor(v) == v; }

void require(bool ok, const LearnerSpec& spec, const std::string& what)
{
    if (!ok) throw std::invalid_argument("learner '" + spec.label + "': " + what);
}

} // namespace

std::string_view learner_kind_name(LearnerKind kind) noexcept
{
    switch (kind) {
    case LearnerKind::Logistic: return "logistic";
    case LearnerKind::Lasso: return "lasso";
    case LearnerKind::Tree: return "tree";
    case LearnerKind::Forest: return "forest";
    case LearnerKind::NeuralNet: return "nnet";
    }
    return "unknown";
}

LearnerSpec LearnerSpec::make(LearnerKind kind, std::map<std::string, double> overrides, std::uint64_t seed,
                              std::string label)
{
    LearnerSpec spec;
    spec.kind = kind;
    spec.hyperparameters = defaults_for(kind);
    spec.seed = seed;
    for (auto& [name, value] : overrides) {
        if (spec.hyperparameters.count(name) == 0) {
            throw std::invalid_argument("unknown hyperparameter '" + name + "' for learner kind " +
                                        std::string(learner_kind_name(kind)));
        }
        spec.hyperparameters[name] = value;
    }
    if (label.empty()) {
        label = std::string(learner_kind_name(kind));
        if (kind == LearnerKind::NeuralNet) {
            label += std::to_string(static_cast<long long>(spec.hyperparameters.at("hidden_size")));
        }
    }
    spec.label = std::move(label);
    spec.validate();
    return spec;
}

double LearnerSpec::get(const std::string& name) const
{
    auto it = hyperparameters.find(name);
    if (it != hyperparameters.end()) return it->second;
    const auto& d = defaults_for(kind);
    auto jt = d.find(name);
    if (jt == d.end()) throw std::invalid_argument("learner '" + label + "' has no hyperparameter '" + name + "'");
    return jt->second;
}

void LearnerSpec::validate() const
{
    const auto& d = defaults_for(kind);
    for (const auto& [name, value] : hyperparameters) {
        require(d.count(name) != 0, *this, "unknown hyperparameter '" + name + "'");
        require(std::isfinite(value), *this, "hyperparameter '" + name + "' is not finite");
    }
    switch (kind) {
    case LearnerKind::Logistic:
        require(get("max_iter") >= 1 && is_whole(get("max_iter")), *this, "max_iter must be a positive integer");
        require(get("tol") > 0, *this, "tol must be positive");
        require(get("ridge") > 0, *this, "ridge must be positive");
        break;
    case LearnerKind::Lasso:
        require(get("n_lambda") >= 1 && is_whole(get("n_lambda")), *this, "n_lambda must be a positive integer");
        require(get("lambda_min_ratio") > 0 && get("lambda_min_ratio") < 1, *this, "lambda_min_ratio must be in (0,1)");
        require(get("cv_folds") >= 2 && is_whole(get("cv_folds")), *this, "cv_folds must be an integer >= 2");
        require(get("lambda") >= 0, *this, "lambda must be non-negative (0 selects by cross-validation)");
        require(get("tol") > 0, *this, "tol must be positive");
        require(get("max_passes") >= 1, *this, "max_passes must be positive");
        require(get("max_irls") >= 1, *this, "max_irls must be positive");
        break;
    case LearnerKind::Tree:
        require(get("cp") >= 0, *this, "cp must be non-negative");
        require(get("min_split_weight") > 0, *this, "min_split_weight must be positive");
        require(get("min_leaf_weight") > 0, *this, "min_leaf_weight must be positive");
        require(get("max_depth") >= 0 && is_whole(get("max_depth")), *this, "max_depth must be a non-negative integer");
        break;
    case LearnerKind::Forest:
        require(get("n_trees") >= 1 && is_whole(get("n_trees")), *this, "n_trees must be >= 1");
        require(get("mtry") >= 0 && is_whole(get("mtry")), *this, "mtry must be a non-negative integer");
        require(get("min_leaf_size") >= 1, *this, "min_leaf_size must be >= 1");
        require(get("max_depth") >= 0 && is_whole(get("max_depth")), *this, "max_depth must be a non-negative integer");
        break;
    case LearnerKind::NeuralNet:
        require(get("hidden_size") >= 1 && is_whole(get("hidden_size")), *this, "hidden_size must be >= 1");
        require(get("decay") >= 0, *this, "decay must be non-negative");
        require(get("max_iter") >= 1 && is_whole(get("max_iter")), *this, "max_iter must be a positive integer");
        require(get("grad_tol") > 0, *this, "grad_tol must be positive");
        require(get("init_range") > 0, *this, "init_range must be positive");
        break;
    }
}

LearnerSpec LearnerSpec::with_seed(std::uint64_t s) const
{
    LearnerSpec copy = *this;
    copy.seed = s;
    return copy;
}

LearnerSpec parse_learner(std::string_view name)
{
    if (name == "logistic") return LearnerSpec::make(LearnerKind::Logistic);
    if (name == "lasso") return LearnerSpec::make(LearnerKind::Lasso);
    if (name == "tree") return LearnerSpec::make(LearnerKind::Tree);
    if (name == "forest") return LearnerSpec::make(LearnerKind::Forest);
    if (name.starts_with("nnet") && name.size() > 4) {
        int hidden = 0;
        const auto digits = name.substr(4);
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), hidden);
        if (ec == std::errc{} && ptr == digits.data() + digits.size() && hidden >= 1) {
            return LearnerSpec::make(LearnerKind::NeuralNet, {{"hidden_size", hidden}});
        }
    }
    throw std::invalid_argument("unknown learner '" + std::string(name) +
                                "' (expected logistic, lasso, tree, forest, or nnet<size>)");
}

std::vector<LearnerSpec> default_library()
{
    return {parse_learner("forest"), parse_learner("tree"),  parse_learner("logistic"), parse_learner("lasso"),
            parse_learner("nnet2"),  parse_learner("nnet3"), parse_learner("nnet5")};
}

std::vector<LearnerSpec> reduced_library()
{
    return {parse_learner("logistic"), parse_learner("lasso"), parse_learner("tree")};
}

std::vector<double> PropensityModel::predict(const Matrix& x) const
{
    if (x.cols() != meta_.p) {
        throw std::invalid_argument("predict: model '" + spec_.label + "' was trained on " + std::to_string(meta_.p) +
                                    " covariates but input has " + std::to_string(x.cols()));
    }
    std::vector<double> out(x.rows());
    impl_->predict(x, out);
    for (double& v : out) v = std::clamp(v, 0.0, 1.0);
    return out;
}

PropensityModel fit_learner(const LearnerSpec& spec, const TrainingSet& data)
{
    switch (spec.kind) {
    case LearnerKind::Logistic: return fit_logistic(data, spec);
    case LearnerKind::Lasso: return fit_lasso(data, spec);
    case LearnerKind::Tree: return fit_tree(data, spec);
    case LearnerKind::Forest: return fit_forest(data, spec);
    case LearnerKind::NeuralNet: return fit_nnet(data, spec);
    }
    throw std::logic_error("unknown learner kind");
}

namespace {

std::string provenance(const WeightVector& w)
{
    std::ostringstream os;
    if (w.is_uniform()) {
        os << "uniform";
    } else {
        os << "w=" << *w.w_source() << ",C=" << *w.controls_per_case();
    }
    os << (w.normalized() ? ",normalized" : ",raw");
    return os.str();
}

PropensityModel tagged(const PropensityModel& m, const WeightVector& w)
{
    TrainingMetadata meta = m.metadata();
    meta.weight_provenance = provenance(w);
    return m.with_metadata(std::move(meta));
}

} // namespace

PropensityModel fit_weighted_logistic(const Cohort& cohort, const WeightVector& weights)
{
    return tagged(fit_logistic(make_training_set(cohort, weights), LearnerSpec::make(LearnerKind::Logistic)), weights);
}

PropensityModel fit_weighted_lasso(const Cohort& cohort, const WeightVector& weights)
{
    return tagged(fit_lasso(make_training_set(cohort, weights), LearnerSpec::make(LearnerKind::Lasso)), weights);
}

PropensityModel fit_weighted_tree(const Cohort& cohort, const WeightVector& weights)
{
    return tagged(fit_tree(make_training_set(cohort, weights), LearnerSpec::make(LearnerKind::Tree)), weights);
}

PropensityModel fit_weighted_forest(const Cohort& cohort, const WeightVector& weights, const LearnerSpec& spec)
{
    if (spec.kind != LearnerKind::Forest) throw std::invalid_argument("fit_weighted_forest: spec is not a forest");
    return tagged(fit_forest(make_training_set(cohort, weights), spec), weights);
}

PropensityModel fit_weighted_nnet(const Cohort& cohort, const WeightVector& weights, const LearnerSpec& spec)
{
    if (spec.kind != LearnerKind::NeuralNet) throw std::invalid_argument("fit_weighted_nnet: spec is not a neural net");
    return tagged(fit_nnet(make_training_set(cohort, weights), spec), weights);
}

} // namespace wps
