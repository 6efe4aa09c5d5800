#pragma once

// Bias / MSE / relative-efficiency metrics and the replication harness for
// the oversampled-cohort simulation study.

#include "wps/sim.hpp"
#include "wps/stacking.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wps::eval {

std::vector<double> pointwise_bias(std::span<const double> true_p, std::span<const double> est_p);
std::vector<double> pointwise_mse(std::span<const double> true_p, std::span<const double> est_p);
// mse_unweighted / mse_weighted; both must be positive.
double relative_efficiency(double mse_unweighted, double mse_weighted);

enum class Variant { WeightedTrueW, WeightedWMinus, WeightedWPlus, Unweighted, RandomSampleBaseline };

std::string_view variant_name(Variant v) noexcept;
Variant parse_variant(std::string_view name);
const std::vector<Variant>& all_variants();
bool is_weighted(Variant v) noexcept;

struct WSettings {
    double w = 0.37;
    double relative_error = 0.10;
    // Misspecified weights are rounded to this many decimals (0.33 and 0.41
    // for w = 0.37). Negative disables rounding.
    int round_digits = 2;
    bool normalize = true;
};

// w used by a variant, or nullopt for unweighted fits.
std::optional<double> w_used(Variant v, const WSettings& s);

enum class EvaluationMode { InSample, PopulationGrid };

std::string_view evaluation_mode_name(EvaluationMode m) noexcept;
EvaluationMode parse_evaluation_mode(std::string_view name);

struct ReplicationConfig {
    Variant variant = Variant::WeightedTrueW;
    std::size_t n_exposed = 200;
    double controls_per_case = 1.0;
    std::size_t replication = 0;
    std::uint64_t base_seed = 20240101;
    std::vector<LearnerSpec> library;
    std::size_t folds = 10;
    LossFunction loss;
    WSettings w;
    EvaluationMode mode = EvaluationMode::InSample;
    sim::DgpSpec dgp;
};

struct ReplicationRecord {
    Variant variant = Variant::WeightedTrueW;
    std::size_t n_exposed = 0;
    double controls_per_case = 0.0;
    std::size_t replication = 0;
    std::uint64_t seed = 0;
    double mean_abs_bias = 0.0;
    double mean_mse = 0.0;
    std::vector<double> alpha;

    friend bool operator==(const ReplicationRecord&, const ReplicationRecord&) = default;
};

// Seed shared by every variant of one (n, C, replication) triple, so the
// weighted and unweighted fits see the same cohort.
std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t n_exposed, double controls_per_case,
                               std::size_t replication) noexcept;

// The cohort a replication fits: conditional for every variant except the
// random-sample baseline, which draws N = n (1 + C) at random.
Cohort replication_cohort(const ReplicationConfig& config);

ReplicationRecord run_replication(const ReplicationConfig& config);

struct ExperimentGrid {
    std::vector<std::size_t> n_values{200};
    std::vector<double> c_values{1.0};
    std::vector<Variant> variants = all_variants();
    std::size_t replications = 100;
    std::uint64_t base_seed = 20240101;
    std::vector<LearnerSpec> library;
    std::size_t folds = 10;
    LossFunction loss;
    WSettings w;
    EvaluationMode mode = EvaluationMode::InSample;
    sim::DgpSpec dgp;
    std::size_t jobs = 0; // 0 = all cores
};

struct CellSummary {
    Variant variant = Variant::WeightedTrueW;
    std::size_t n_exposed = 0;
    double controls_per_case = 0.0;
    std::size_t replications = 0;
    double pct_bias = 0.0; // 100 x mean over replications of mean |p - p_hat|
    double mse = 0.0;
    std::optional<double> rel_eff; // weighted variants only
    std::vector<double> mean_alpha;
};

struct ExperimentReport {
    std::vector<ReplicationRecord> records; // grid order: n, C, variant, replication
    std::vector<CellSummary> cells;
    std::vector<std::string> failures;
    std::size_t expected_replications = 0;

    bool complete() const noexcept { return failures.empty(); }
};

// Cell summaries from records alone; cells follow first appearance order.
std::vector<CellSummary> summarize(const std::vector<ReplicationRecord>& records);

using ProgressCallback = std::function<void(std::size_t done, std::size_t total)>;

ExperimentReport run_experiment(const ExperimentGrid& grid, const ProgressCallback& progress = {});

} // namespace wps::eval
