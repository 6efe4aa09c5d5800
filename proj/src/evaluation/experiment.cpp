#include "wps/evaluation.hpp"

#include "wps/parallel.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace wps::eval {

std::string_view variant_name(Variant v) noexcept
{
    switch (v) {
    case Variant::WeightedTrueW: return "WeightedTrueW";
    case Variant::WeightedWMinus: return "WeightedWMinus";
    case Variant::WeightedWPlus: return "WeightedWPlus";
    case Variant::Unweighted: return "Unweighted";
    case Variant::RandomSampleBaseline: return "RandomSampleBaseline";
    }
    return "?";
}

Variant parse_variant(std::string_view name)
{
    for (Variant v : all_variants()) {
        if (variant_name(v) == name) return v;
    }
    throw std::invalid_argument("unknown estimator variant '" + std::string(name) + "'");
}

const std::vector<Variant>& all_variants()
{
    static const std::vector<Variant> v{Variant::WeightedTrueW, Variant::WeightedWMinus, Variant::WeightedWPlus,
                                        Variant::Unweighted, Variant::RandomSampleBaseline};
    return v;
}

bool is_weighted(Variant v) noexcept
{
    return v == Variant::WeightedTrueW || v == Variant::WeightedWMinus || v == Variant::WeightedWPlus;
}

std::optional<double> w_used(Variant v, const WSettings& s)
{
    auto rounded = [&](double x) {
        if (s.round_digits < 0) return x;
        const double scale = std::pow(10.0, s.round_digits);
        return std::round(x * scale) / scale;
    };
    switch (v) {
    case Variant::WeightedTrueW: return s.w;
    case Variant::WeightedWMinus: return rounded(s.w * (1.0 - s.relative_error));
    case Variant::WeightedWPlus: return rounded(s.w * (1.0 + s.relative_error));
    default: return std::nullopt;
    }
}

std::string_view evaluation_mode_name(EvaluationMode m) noexcept
{
    return m == EvaluationMode::InSample ? "in_sample" : "population_grid";
}

EvaluationMode parse_evaluation_mode(std::string_view name)
{
    if (name == "in_sample" || name == "in-sample") return EvaluationMode::InSample;
    if (name == "population_grid" || name == "population-grid") return EvaluationMode::PopulationGrid;
    throw std::invalid_argument("unknown evaluation mode '" + std::string(name) +
                                "' (expected in_sample or population_grid)");
}

std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t n_exposed, double controls_per_case,
                               std::size_t replication) noexcept
{
    std::uint64_t s = mix_seed(base_seed, n_exposed);
    s = mix_seed(s, std::bit_cast<std::uint64_t>(controls_per_case));
    return mix_seed(s, replication);
}

Cohort replication_cohort(const ReplicationConfig& config)
{
    const std::uint64_t seed =
        replication_seed(config.base_seed, config.n_exposed, config.controls_per_case, config.replication);
    if (config.variant == Variant::RandomSampleBaseline) {
        RngStream rng(seed, 1);
        const std::size_t n =
            config.n_exposed + realized_control_count(config.n_exposed, config.controls_per_case);
        return sim::sample_random_cohort(n, rng, config.dgp);
    }
    RngStream rng(seed, 0);
    return sim::sample_conditional_cohort(config.n_exposed, config.controls_per_case, rng, config.dgp);
}

ReplicationRecord run_replication(const ReplicationConfig& config)
{
    const std::uint64_t seed =
        replication_seed(config.base_seed, config.n_exposed, config.controls_per_case, config.replication);
    const Cohort cohort = replication_cohort(config);
    const auto w = w_used(config.variant, config.w);
    const WeightVector weights = w ? compute_observation_weights(cohort, *w, config.w.normalize) : uniform_weights(cohort);

    const EnsembleFit fit =
        fit_super_learner(cohort, weights, config.library, config.folds, config.loss, mix_seed(seed, 2));

    ReplicationRecord rec;
    rec.variant = config.variant;
    rec.n_exposed = config.n_exposed;
    rec.controls_per_case = config.controls_per_case;
    rec.replication = config.replication;
    rec.seed = seed;
    rec.alpha = fit.alpha;

    if (config.mode == EvaluationMode::InSample) {
        const std::vector<double> est = predict_ensemble(fit, cohort.covariates());
        const auto& truth = *cohort.true_propensity();
        const auto bias = pointwise_bias(truth, est);
        const auto mse = pointwise_mse(truth, est);
        double sb = 0.0, sm = 0.0;
        for (std::size_t i = 0; i < bias.size(); ++i) {
            sb += bias[i];
            sm += mse[i];
        }
        rec.mean_abs_bias = sb / static_cast<double>(bias.size());
        rec.mean_mse = sm / static_cast<double>(mse.size());
    } else {
        const sim::PatternGrid grid = sim::enumerate_patterns(config.dgp);
        const std::vector<double> est = predict_ensemble(fit, grid.patterns);
        const auto bias = pointwise_bias(grid.propensity, est);
        const auto mse = pointwise_mse(grid.propensity, est);
        for (std::size_t i = 0; i < bias.size(); ++i) {
            rec.mean_abs_bias += grid.mass[i] * bias[i];
            rec.mean_mse += grid.mass[i] * mse[i];
        }
    }
    return rec;
}

std::vector<CellSummary> summarize(const std::vector<ReplicationRecord>& records)
{
    using Key = std::tuple<int, std::size_t, double>;
    std::map<Key, std::size_t> index;
    std::vector<CellSummary> cells;
    std::vector<double> bias_sum;
    for (const auto& r : records) {
        const Key key{static_cast<int>(r.variant), r.n_exposed, r.controls_per_case};
        auto [it, inserted] = index.try_emplace(key, cells.size());
        if (inserted) {
            CellSummary c;
            c.variant = r.variant;
            c.n_exposed = r.n_exposed;
            c.controls_per_case = r.controls_per_case;
            c.mean_alpha.assign(r.alpha.size(), 0.0);
            cells.push_back(std::move(c));
            bias_sum.push_back(0.0);
        }
        CellSummary& c = cells[it->second];
        if (c.mean_alpha.size() != r.alpha.size()) throw std::invalid_argument("records disagree on library size");
        ++c.replications;
        bias_sum[it->second] += r.mean_abs_bias;
        c.mse += r.mean_mse;
        for (std::size_t l = 0; l < r.alpha.size(); ++l) c.mean_alpha[l] += r.alpha[l];
    }
    for (std::size_t k = 0; k < cells.size(); ++k) {
        auto& c = cells[k];
        const auto reps = static_cast<double>(c.replications);
        c.pct_bias = 100.0 * (bias_sum[k] / reps);
        c.mse /= reps;
        for (double& a : c.mean_alpha) a /= reps;
    }
    for (auto& c : cells) {
        if (!is_weighted(c.variant)) continue;
        const auto it = index.find(Key{static_cast<int>(Variant::Unweighted), c.n_exposed, c.controls_per_case});
        if (it == index.end()) continue;
        const double mse_u = cells[it->second].mse;
        if (mse_u > 0.0 && c.mse > 0.0) c.rel_eff = relative_efficiency(mse_u, c.mse);
    }
    return cells;
}

ExperimentReport run_experiment(const ExperimentGrid& grid, const ProgressCallback& progress)
{
    if (grid.replications < 1) throw std::invalid_argument("experiment: at least one replication is required");
    if (grid.library.empty()) throw std::invalid_argument("experiment: learner library is empty");

    std::vector<ReplicationConfig> configs;
    for (std::size_t n : grid.n_values) {
        for (double c : grid.c_values) {
            for (Variant v : grid.variants) {
                for (std::size_t r = 0; r < grid.replications; ++r) {
                    ReplicationConfig cfg;
                    cfg.variant = v;
                    cfg.n_exposed = n;
                    cfg.controls_per_case = c;
                    cfg.replication = r;
                    cfg.base_seed = grid.base_seed;
                    cfg.library = grid.library;
                    cfg.folds = grid.folds;
                    cfg.loss = grid.loss;
                    cfg.w = grid.w;
                    cfg.mode = grid.mode;
                    cfg.dgp = grid.dgp;
                    configs.push_back(std::move(cfg));
                }
            }
        }
    }

    const std::size_t total = configs.size();
    std::vector<std::optional<ReplicationRecord>> slots(total);
    std::vector<std::string> errors(total);
    std::mutex progress_mu;
    std::size_t done = 0;
    parallel_for(total, grid.jobs, [&](std::size_t j) {
        const auto& cfg = configs[j];
        try {
            slots[j] = run_replication(cfg);
        } catch (const std::exception& ex) {
            char c_text[32];
            std::snprintf(c_text, sizeof c_text, "%g", cfg.controls_per_case);
            errors[j] = std::string(variant_name(cfg.variant)) + " n=" + std::to_string(cfg.n_exposed) + " C=" + c_text +
                        " rep=" + std::to_string(cfg.replication) + ": " + ex.what();
        }
        if (progress) {
            std::lock_guard lock(progress_mu);
            progress(++done, total);
        }
    });

    ExperimentReport report;
    report.expected_replications = grid.replications;
    for (std::size_t j = 0; j < total; ++j) {
        if (slots[j]) {
            report.records.push_back(std::move(*slots[j]));
        } else {
            report.failures.push_back(std::move(errors[j]));
        }
    }
    report.cells = summarize(report.records);
    return report;
}

} // namespace wps::eval
