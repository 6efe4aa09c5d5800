#include "wps/cli.hpp"
#include "wps/kernels.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <sstream>

namespace {

using wps::config::ExperimentConfig;

// Flag values kept as text so they go through the same parser as the
// config file.
struct SimulateFlags {
    std::string config;
    std::optional<std::string> profile, n, c, variants, replications, seed, folds, loss, library, jobs, out,
        evaluation_mode, w, w_error;
    bool progress = false;
};

void apply_flag(ExperimentConfig& cfg, const std::optional<std::string>& v, const char* section, const char* key)
{
    if (v) wps::config::set_option(cfg, section, key, *v);
}

int run_simulate(const SimulateFlags& f)
{
    ExperimentConfig cfg = wps::config::profile(f.profile.value_or("desk"));
    try {
        if (!f.config.empty()) cfg = wps::config::load_config_file(f.config, cfg);
        apply_flag(cfg, f.n, "experiment", "n");
        apply_flag(cfg, f.c, "experiment", "C");
        apply_flag(cfg, f.variants, "experiment", "variants");
        apply_flag(cfg, f.replications, "experiment", "replications");
        apply_flag(cfg, f.seed, "experiment", "seed");
        apply_flag(cfg, f.folds, "experiment", "folds");
        apply_flag(cfg, f.loss, "experiment", "loss");
        apply_flag(cfg, f.evaluation_mode, "experiment", "evaluation_mode");
        apply_flag(cfg, f.jobs, "experiment", "jobs");
        apply_flag(cfg, f.w, "weights", "w");
        apply_flag(cfg, f.w_error, "weights", "w_error");
        apply_flag(cfg, f.library, "library", "learners");
        apply_flag(cfg, f.out, "output", "dir");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return wps::cli::kExitUsage;
    }
    return wps::cli::cmd_simulate(cfg, std::cerr, f.progress);
}

std::vector<std::string> split_commas(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Weighted stacked propensity-score estimation for exposure-oversampled cohorts"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(WPS_VERSION));
    std::string isa;
    app.add_option("--kernels", isa, "Kernel variant: auto, scalar or avx2")
        ->envname("WPS_KERNELS")
        ->check(CLI::IsMember({"auto", "scalar", "avx2"}));

    SimulateFlags sf;
    auto* sim = app.add_subcommand("simulate", "Run the simulation grid and write records, report and manifest");
    sim->add_option("--config", sf.config, "Config file (sectioned key = value, or JSON)")->envname("WPS_CONFIG");
    sim->add_option("--profile", sf.profile, "desk or paper")->envname("WPS_PROFILE");
    sim->add_option("--n", sf.n, "Exposed counts, comma separated")->envname("WPS_N");
    sim->add_option("--controls-per-case,--C", sf.c, "Controls per case, comma separated")
        ->envname("WPS_CONTROLS_PER_CASE");
    sim->add_option("--variants", sf.variants, "Variants, comma separated")->envname("WPS_VARIANTS");
    sim->add_option("--replications", sf.replications, "Replications per cell")->envname("WPS_REPLICATIONS");
    sim->add_option("--seed", sf.seed, "Base seed")->envname("WPS_SEED");
    sim->add_option("--folds", sf.folds, "Cross-validation folds")->envname("WPS_FOLDS");
    sim->add_option("--loss", sf.loss, "nll or squared")->envname("WPS_LOSS");
    sim->add_option("--library", sf.library, "Learners, comma separated, or full / reduced")->envname("WPS_LIBRARY");
    sim->add_option("--jobs", sf.jobs, "Worker threads (0 = all cores)")->envname("WPS_JOBS");
    sim->add_option("--out", sf.out, "Output directory")->envname("WPS_OUT");
    sim->add_option("--evaluation-mode", sf.evaluation_mode, "in_sample or population_grid")
        ->envname("WPS_EVALUATION_MODE");
    sim->add_option("--w", sf.w, "Population exposure probability")->envname("WPS_W");
    sim->add_option("--w-error", sf.w_error, "Relative error for the perturbed-w variants")->envname("WPS_W_ERROR");
    sim->add_flag("--progress", sf.progress, "Report progress on stderr");

    wps::cli::FitOptions fo;
    std::optional<double> fit_c;
    std::string fit_library = "full";
    std::string fit_loss = "nll";
    double clip = wps::kDefaultClip;
    bool no_normalize = false;
    auto* fit = app.add_subcommand("fit", "Fit the weighted ensemble to a cohort CSV");
    fit->add_option("--data", fo.data, "Cohort CSV")->required()->envname("WPS_DATA");
    fit->add_option("--exposure-col", fo.exposure_column, "Exposure column")->envname("WPS_EXPOSURE_COL");
    fit->add_option("--id-col", fo.id_column, "Row id column")->envname("WPS_ID_COL");
    fit->add_option("--w", fo.w, "Population exposure probability")->required()->envname("WPS_W");
    fit->add_option("--controls-per-case", fit_c, "Controls per case (default: controls / exposed)")
        ->envname("WPS_CONTROLS_PER_CASE");
    fit->add_option("--folds", fo.folds, "Cross-validation folds")->envname("WPS_FOLDS");
    fit->add_option("--seed", fo.seed, "Seed")->envname("WPS_SEED");
    fit->add_option("--library", fit_library, "Learners, comma separated, or full / reduced")->envname("WPS_LIBRARY");
    fit->add_option("--loss", fit_loss, "nll or squared")->envname("WPS_LOSS");
    fit->add_option("--clip", clip, "Probability clip for the log loss")->envname("WPS_CLIP");
    fit->add_option("--jobs", fo.jobs, "Worker threads for cross-validation (0 = all cores)")->envname("WPS_JOBS");
    fit->add_option("--out", fo.out, "Predictions CSV")->envname("WPS_OUT");
    fit->add_flag("--external-cv", fo.external_cv, "Also estimate the ensemble loss by nested cross-validation");
    fit->add_flag("--no-normalize", no_normalize, "Keep raw weights instead of scaling them to sum to N");

    std::string report_path, figure, plot_out = "plot.csv";
    auto* plot = app.add_subcommand("plotdata", "Reshape a report CSV into long-format plot data");
    plot->add_option("--report", report_path, "Report CSV")->required()->envname("WPS_REPORT");
    plot->add_option("--figure", figure, "bias, mse or releff")->required()->envname("WPS_FIGURE");
    plot->add_option("--out", plot_out, "Output CSV")->envname("WPS_OUT");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : wps::cli::kExitUsage;
    }

    if (isa == "scalar") {
        wps::kernels::set_active_isa(wps::kernels::Isa::Scalar);
    } else if (isa == "avx2") {
        if (wps::kernels::set_active_isa(wps::kernels::Isa::Avx2) != wps::kernels::Isa::Avx2) {
            std::cerr << "warning: AVX2 not available, using scalar kernels\n";
        }
    }

    if (*sim) return run_simulate(sf);
    if (*fit) {
        try {
            fo.controls_per_case = fit_c;
            fo.learners = split_commas(fit_library);
            fo.loss.kind = wps::config::parse_loss(fit_loss);
            fo.loss.clip_epsilon = clip;
            fo.loss.validate();
            fo.normalize = !no_normalize;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return wps::cli::kExitUsage;
        }
        return wps::cli::cmd_fit(fo, std::cerr);
    }
    return wps::cli::cmd_plotdata(report_path, figure, plot_out, std::cerr);
}
