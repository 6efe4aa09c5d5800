#pragma once

// Property checks shared by the unit tests and the acceptance runner. Each
// returns a verdict with a short human-readable detail instead of asserting,
// so the acceptance runner can print one line per check.

#include "wps/cli.hpp"
#include "wps/core.hpp"
#include "wps/evaluation.hpp"
#include "wps/io.hpp"
#include "wps/learners.hpp"
#include "wps/rng.hpp"
#include "wps/sim.hpp"
#include "wps/stacking.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace wps::testing {

struct Verdict {
    bool ok = true;
    std::string detail;
};

inline std::string fmt(double v)
{
    std::ostringstream s;
    s.precision(3);
    s << v;
    return s.str();
}

inline Cohort random_dgp_cohort(std::size_t n, std::uint64_t seed)
{
    RngStream rng(seed, 0);
    return sim::sample_random_cohort(n, rng);
}

inline Cohort conditional_dgp_cohort(std::size_t n_exposed, double c, std::uint64_t seed)
{
    RngStream rng(seed, 0);
    return sim::sample_conditional_cohort(n_exposed, c, rng);
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.size() != b.size()) return INFINITY;
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Same rows once with integer weights, once repeated that many times with
// unit weight. Predictions are compared on all 64 covariate patterns.
inline Verdict duplication_equivalence(const LearnerSpec& spec, std::uint64_t seed, double tol)
{
    const Cohort cohort = random_dgp_cohort(300, seed);
    RngStream rng(seed, 7);
    std::vector<double> w(cohort.size());
    for (auto& v : w) v = static_cast<double>(1 + rng.uniform_index(4));

    const TrainingSet weighted = make_training_set(cohort.covariates(), cohort.exposure(), w);
    std::vector<std::size_t> rep_rows;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        for (int k = 0; k < static_cast<int>(w[i]); ++k) rep_rows.push_back(i);
    }
    std::vector<double> rep_e, ones(rep_rows.size(), 1.0);
    for (auto i : rep_rows) rep_e.push_back(cohort.exposure()[i]);
    const TrainingSet duplicated = make_training_set(cohort.covariates().select_rows(rep_rows), rep_e, ones);

    const Matrix grid = sim::enumerate_patterns({}).patterns;
    const auto a = fit_learner(spec, weighted).predict(grid);
    const auto b = fit_learner(spec, duplicated).predict(grid);
    const double d = max_abs_diff(a, b);
    return {d <= tol, spec.label + " max |diff| " + fmt(d)};
}

// Observation weights that happen to be constant must give the same
// super learner as plain uniform weights.
inline Verdict uniform_weight_reduction(const std::vector<LearnerSpec>& library, std::uint64_t seed, double tol)
{
    const Cohort cohort = conditional_dgp_cohort(150, 2.0, seed);
    const double c = 2.0;
    const WeightVector constant = compute_observation_weights(cohort, 1.0 / (1.0 + c), true);
    const WeightVector uniform = uniform_weights(cohort);
    const LossFunction loss;
    const auto fa = fit_super_learner(cohort, constant, library, 5, loss, seed);
    const auto fb = fit_super_learner(cohort, uniform, library, 5, loss, seed);
    const double d = max_abs_diff(predict_ensemble(fa, cohort.covariates()), predict_ensemble(fb, cohort.covariates()));
    return {d <= tol, "max |diff| " + fmt(d)};
}

// Analytic gradient against central differences at random parameter points.
inline Verdict nnet_gradient(std::size_t hidden, std::uint64_t seed, std::size_t points, double rel_tol)
{
    const Cohort cohort = random_dgp_cohort(200, seed);
    RngStream rng(seed, 11);
    std::vector<double> w(cohort.size());
    for (auto& v : w) v = 0.2 + rng.uniform();
    const TrainingSet data = make_training_set(cohort.covariates(), cohort.exposure(), w);
    const std::size_t np = nnet::param_count(data.num_covariates(), hidden);
    const double decay = 1e-3;
    double worst = 0.0;
    std::vector<double> grad(np), scratch(np);
    for (std::size_t pt = 0; pt < points; ++pt) {
        std::vector<double> params(np);
        for (auto& v : params) v = 2.0 * rng.uniform() - 1.0;
        nnet::objective(data, hidden, decay, params, grad);
        for (std::size_t j = 0; j < np; ++j) {
            const double h = 1e-5 * std::max(1.0, std::abs(params[j]));
            auto p = params;
            p[j] = params[j] + h;
            const double up = nnet::objective(data, hidden, decay, p, scratch);
            p[j] = params[j] - h;
            const double down = nnet::objective(data, hidden, decay, p, scratch);
            const double fd = (up - down) / (2.0 * h);
            const double rel = std::abs(fd - grad[j]) / std::max({std::abs(fd), std::abs(grad[j]), 1.0});
            worst = std::max(worst, rel);
        }
    }
    return {worst <= rel_tol, "hidden=" + std::to_string(hidden) + " worst relative error " + fmt(worst)};
}

inline Verdict alpha_on_simplex(const std::vector<double>& alpha, double tol = 1e-12)
{
    double sum = 0.0;
    for (double a : alpha) {
        if (!(a >= 0.0)) return {false, "negative or NaN alpha " + fmt(a)};
        sum += a;
    }
    return {std::abs(sum - 1.0) <= tol, "sum " + fmt(sum)};
}

// No fold's models saw any row of that fold, and each fold's training set
// is exactly the complement.
inline Verdict out_of_fold_purity(const CrossValidatedPredictions& cv)
{
    for (std::size_t f = 0; f < cv.folds.k; ++f) {
        const auto& train = cv.training_rows.at(f);
        for (auto r : train) {
            if (cv.folds.fold_of[r] == f) {
                return {false, "fold " + std::to_string(f) + " trained on its own row " + std::to_string(r)};
            }
        }
        if (train != cv.folds.rows_outside(f)) return {false, "fold " + std::to_string(f) + " training rows differ"};
    }
    return {true, std::to_string(cv.folds.k) + " folds clean"};
}

inline Verdict jensen(const std::vector<eval::ReplicationRecord>& records)
{
    std::size_t bad = 0;
    for (const auto& r : records) {
        if (r.mean_mse < r.mean_abs_bias * r.mean_abs_bias * (1.0 - 1e-12)) ++bad;
    }
    return {bad == 0, std::to_string(records.size()) + " records, " + std::to_string(bad) + " violations"};
}

inline std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Two runs of the same small config give byte-identical record files.
inline Verdict rerun_identical(const std::filesystem::path& dir)
{
    config::ExperimentConfig cfg;
    cfg.n_values = {40};
    cfg.c_values = {1.0, 1.5};
    cfg.replications = 2;
    cfg.folds = 3;
    cfg.learners = config::expand_learners({"reduced"});
    cfg.jobs = 2;
    std::ostringstream log;
    cfg.out_dir = (dir / "a").string();
    if (cli::cmd_simulate(cfg, log) != cli::kExitOk) return {false, "first run failed: " + log.str()};
    cfg.out_dir = (dir / "b").string();
    cfg.jobs = 1;
    if (cli::cmd_simulate(cfg, log) != cli::kExitOk) return {false, "second run failed: " + log.str()};
    const std::string a = slurp(dir / "a" / "records.csv");
    const std::string b = slurp(dir / "b" / "records.csv");
    return {!a.empty() && a == b, std::to_string(a.size()) + " bytes, " + (a == b ? "identical" : "different")};
}

// Exported simulated cohort fed back through cmd_fit matches the in-process
// fit.
inline Verdict fit_round_trip(const std::filesystem::path& dir, const std::vector<std::string>& learners,
                              double tol)
{
    const std::uint64_t seed = 4242;
    const Cohort cohort = conditional_dgp_cohort(200, 1.0, seed);
    const double w = 0.37;
    std::filesystem::create_directories(dir);
    const auto data_path = dir / "cohort.csv";
    {
        std::ofstream out(data_path, std::ios::binary);
        io::write_cohort_csv(out, cohort);
    }
    cli::FitOptions opt;
    opt.data = data_path.string();
    opt.w = w;
    opt.learners = learners;
    opt.folds = 10;
    opt.seed = seed;
    opt.out = (dir / "pred.csv").string();
    std::ostringstream log;
    if (cli::cmd_fit(opt, log) != cli::kExitOk) return {false, "cmd_fit failed: " + log.str()};

    config::ExperimentConfig lib;
    lib.learners = config::expand_learners(learners);
    const WeightVector weights = compute_observation_weights(cohort, w, true);
    const auto fit = fit_super_learner(cohort, weights, lib.library(), 10, LossFunction{}, seed);
    const auto expected = predict_ensemble(fit, cohort.covariates());

    const io::CsvTable t = io::read_csv_file(opt.out);
    const auto pcol = t.column("propensity");
    const auto icol = t.column("id");
    if (!pcol || !icol || t.rows.size() != cohort.size()) return {false, "malformed predictions file"};
    double worst = 0.0;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (t.rows[r][*icol] != cohort.ids()[r]) return {false, "row order changed at " + std::to_string(r)};
        worst = std::max(worst, std::abs(io::parse_double(t.rows[r][*pcol], "propensity") - expected[r]));
    }
    return {worst <= tol, "max |diff| " + fmt(worst) + " over " + std::to_string(t.rows.size()) + " rows"};
}

} // namespace wps::testing
