#pragma once

// The simulate / fit / plotdata commands. The executable only parses flags
// into these option structs; everything else lives here so tests can drive
// the commands in-process.

#include "wps/config.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace wps::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1; // run failed or finished with failed replications
inline constexpr int kExitUsage = 2;   // bad arguments, config, or input file

// Writes <out_dir>/records.csv, report.csv and manifest.json.
int cmd_simulate(const config::ExperimentConfig& cfg, std::ostream& log, bool progress = false);

struct FitOptions {
    std::string data;
    std::string exposure_column = "exposure";
    std::string id_column = "id";
    double w = 0.0;
    std::optional<double> controls_per_case; // nullopt = controls / exposed
    std::size_t folds = 10;
    std::vector<std::string> learners{"forest", "tree", "logistic", "lasso", "nnet2", "nnet3", "nnet5"};
    LossFunction loss;
    std::uint64_t seed = 20240101;
    bool normalize = true;
    bool external_cv = false;
    std::size_t jobs = 1;
    std::string out = "predictions.csv";
};

// Writes per-row predictions to `out` (id, exposure, weight, propensity,
// in input row order) and the ensemble summary to the sidecar returned by
// ensemble_sidecar_path.
int cmd_fit(const FitOptions& options, std::ostream& log);

std::string ensemble_sidecar_path(const std::string& predictions_path);

// figure: bias, mse or releff.
int cmd_plotdata(const std::string& report_path, const std::string& figure, const std::string& out_path,
                 std::ostream& log);

} // namespace wps::cli
