#include "wps/cli.hpp"

#include "wps/io.hpp"
#include "wps/kernels.hpp"
#include "wps/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>

namespace wps::cli {

namespace {

namespace fs = std::filesystem;

std::ofstream open_output(const fs::path& path)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    return out;
}

std::string c_label(double c) { return io::format_double(c); }

} // namespace

int cmd_simulate(const config::ExperimentConfig& cfg, std::ostream& log, bool progress)
{
    eval::ExperimentGrid grid;
    try {
        grid = cfg.grid();
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    const fs::path dir(cfg.out_dir);
    const std::size_t total =
        grid.n_values.size() * grid.c_values.size() * grid.variants.size() * grid.replications;
    log << "simulate: " << total << " replications (" << grid.library.size() << " learners, "
        << resolve_jobs(grid.jobs) << " jobs, kernels " << kernels::isa_name(kernels::active_isa()) << ")\n";

    eval::ProgressCallback cb;
    if (progress) {
        const std::size_t step = std::max<std::size_t>(1, total / 20);
        cb = [&log, step](std::size_t done, std::size_t all) {
            if (done % step == 0 || done == all) log << "  " << done << "/" << all << '\n' << std::flush;
        };
    }

    eval::ExperimentReport report;
    try {
        report = eval::run_experiment(grid, cb);
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return kExitFailure;
    }

    try {
        {
            auto out = open_output(dir / "records.csv");
            io::write_records_csv(out, report.records, grid.library.size());
        }
        {
            auto out = open_output(dir / "report.csv");
            io::write_report_csv(out, report.cells);
        }
        nlohmann::ordered_json manifest;
        manifest["tool"] = "wps";
        manifest["version"] = WPS_VERSION;
        manifest["command"] = "simulate";
        manifest["config"] = nlohmann::ordered_json::parse(config::config_to_json(cfg));
        manifest["seed"] = cfg.seed;
        manifest["kernels"] = std::string(kernels::isa_name(kernels::active_isa()));
        manifest["records"] = report.records.size();
        manifest["expected_records"] = total;
        manifest["complete"] = report.complete();
        manifest["failures"] = report.failures;
        manifest["outputs"] = {{"records", "records.csv"}, {"report", "report.csv"}};
        auto out = open_output(dir / "manifest.json");
        out << manifest.dump(2) << '\n';
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return kExitFailure;
    }

    for (const auto& f : report.failures) log << "failed: " << f << '\n';
    log << "wrote " << (dir / "records.csv").string() << ", " << (dir / "report.csv").string() << ", "
        << (dir / "manifest.json").string() << '\n';
    return report.complete() ? kExitOk : kExitFailure;
}

std::string ensemble_sidecar_path(const std::string& predictions_path)
{
    fs::path p(predictions_path);
    if (p.extension() == ".csv") p.replace_extension();
    return p.string() + ".ensemble.csv";
}

int cmd_fit(const FitOptions& options, std::ostream& log)
{
    io::CohortTable table;
    try {
        table = io::read_cohort_csv_file(options.data, {options.exposure_column, options.id_column, "true_propensity"});
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    const std::size_t n = table.exposure.size();
    const std::size_t n1 = table.num_exposed();
    const std::size_t n0 = n - n1;
    if (n1 == 0 || n0 == 0) {
        log << "error: exposure column '" << options.exposure_column << "' is degenerate (" << n1 << " exposed, " << n0
            << " unexposed)\n";
        return kExitUsage;
    }
    if (!(options.w > 0.0 && options.w < 1.0)) {
        log << "error: --w must lie strictly between 0 and 1\n";
        return kExitUsage;
    }
    const double c = options.controls_per_case.value_or(static_cast<double>(n0) / static_cast<double>(n1));
    if (!(c > 0.0) || realized_control_count(n1, c) != n0) {
        log << "error: controls per case " << c << " implies " << (c > 0.0 ? realized_control_count(n1, c) : 0)
            << " controls for " << n1 << " exposed, but the file has " << n0 << '\n';
        return kExitUsage;
    }

    // Canonical order: rows sorted by id so the fit does not depend on the
    // order of the input file.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (!table.ids.empty()) {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return table.ids[a] < table.ids[b]; });
        for (std::size_t k = 1; k < n; ++k) {
            if (table.ids[order[k]] == table.ids[order[k - 1]]) {
                log << "error: duplicate row id '" << table.ids[order[k]] << "'\n";
                return kExitUsage;
            }
        }
    } else {
        log << "note: no '" << options.id_column << "' column; rows are used in file order\n";
    }

    std::vector<double> e(n);
    std::vector<std::string> ids;
    std::optional<std::vector<double>> tp;
    if (table.true_propensity) tp.emplace(n);
    for (std::size_t r = 0; r < n; ++r) {
        e[r] = table.exposure[order[r]];
        if (!table.ids.empty()) ids.push_back(table.ids[order[r]]);
        if (tp) (*tp)[r] = (*table.true_propensity)[order[r]];
    }

    try {
        const Cohort cohort(table.covariates.select_rows(order), std::move(e), ConditionalOnExposure{n1, c},
                            std::move(ids), table.covariate_names, std::move(tp));
        const WeightVector weights = compute_observation_weights(cohort, options.w, options.normalize);
        config::ExperimentConfig lib_cfg;
        lib_cfg.learners = config::expand_learners(options.learners);
        const std::vector<LearnerSpec> library = lib_cfg.library();

        StackingOptions so;
        so.jobs = options.jobs;
        const EnsembleFit fit =
            fit_super_learner(cohort, weights, library, options.folds, options.loss, options.seed, so);
        const std::vector<double> p = predict_ensemble(fit, cohort.covariates());

        std::optional<ExternalCvResult> ext;
        if (options.external_cv) {
            ext = external_cv_super_learner(cohort, weights, library, options.folds, options.folds, options.loss,
                                            options.seed, so);
        }

        // Back to input order.
        std::vector<std::size_t> position(n);
        for (std::size_t r = 0; r < n; ++r) position[order[r]] = r;
        {
            auto out = open_output(options.out);
            io::write_csv_row(out, {"id", options.exposure_column, "weight", "propensity"});
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t r = position[i];
                io::write_csv_row(out, {cohort.ids()[r], cohort.exposure()[r] == 1.0 ? "1" : "0",
                                        io::format_double(weights[r]), io::format_double(p[r])});
            }
        }
        const std::string sidecar = ensemble_sidecar_path(options.out);
        {
            auto out = open_output(sidecar);
            io::write_csv_row(out, {"learner", "alpha", "cv_loss"});
            for (std::size_t l = 0; l < library.size(); ++l) {
                io::write_csv_row(out, {library[l].label, io::format_double(fit.alpha[l]), io::format_double(fit.cv_loss[l])});
            }
            io::write_csv_row(out, {"ensemble", "NA", io::format_double(fit.ensemble_cv_loss)});
            if (ext) io::write_csv_row(out, {"external_cv", "NA", io::format_double(ext->loss)});
        }

        log << "fit: N=" << n << " (" << n1 << " exposed), C=" << c << ", w=" << options.w << '\n';
        for (std::size_t l = 0; l < library.size(); ++l) {
            log << "  alpha[" << library[l].label << "] = " << fit.alpha[l] << '\n';
        }
        if (ext) log << "  external cross-validated loss = " << ext->loss << '\n';
        for (const auto& wmsg : fit.warnings) log << "warning: " << wmsg << '\n';
        log << "wrote " << options.out << " and " << sidecar << '\n';
    } catch (const std::invalid_argument& ex) {
        log << "error: " << ex.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& ex) {
        log << "error: " << ex.what() << '\n';
        return kExitFailure;
    }
    return kExitOk;
}

int cmd_plotdata(const std::string& report_path, const std::string& figure, const std::string& out_path,
                 std::ostream& log)
{
    if (figure != "bias" && figure != "mse" && figure != "releff") {
        log << "error: unknown figure '" << figure << "' (expected bias, mse or releff)\n";
        return kExitUsage;
    }
    std::vector<eval::CellSummary> cells;
    try {
        std::ifstream in(report_path, std::ios::binary);
        if (!in) throw io::InputError("cannot open '" + report_path + "'");
        cells = io::read_report_csv(in);
    } catch (const std::exception& e) {
        log << "error: " << report_path << ": " << e.what() << '\n';
        return kExitUsage;
    }
    try {
        auto out = open_output(out_path);
        io::write_csv_row(out, {"figure", "series", "variant", "C", "n", "N", "y"});
        for (const auto& c : cells) {
            const std::size_t big_n = c.n_exposed + realized_control_count(c.n_exposed, c.controls_per_case);
            std::string series = std::string(eval::variant_name(c.variant)) + " C=" + c_label(c.controls_per_case);
            double y = 0.0;
            if (figure == "bias") {
                y = c.pct_bias;
            } else if (figure == "mse") {
                y = c.mse;
            } else {
                // One series per C: the correctly weighted ensemble against
                // the unweighted one.
                if (c.variant != eval::Variant::WeightedTrueW || !c.rel_eff) continue;
                series = "C=" + c_label(c.controls_per_case);
                y = *c.rel_eff;
            }
            io::write_csv_row(out, {figure, series, std::string(eval::variant_name(c.variant)),
                                    c_label(c.controls_per_case), std::to_string(c.n_exposed), std::to_string(big_n),
                                    io::format_double(y)});
        }
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitOk;
}

} // namespace wps::cli
