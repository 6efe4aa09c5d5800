#pragma once

// CSV reading/writing, cohort files, and the persisted record/report
// schemas.

#include "wps/core.hpp"
#include "wps/evaluation.hpp"

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wps::io {

// Schema or parse problem in an input file; line is 1-based (0 if unknown).
class InputError : public std::runtime_error {
public:
    InputError(const std::string& what, std::size_t line = 0) : std::runtime_error(what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_of; // source line of each row

    // Index of a header column, or nullopt.
    std::optional<std::size_t> column(std::string_view name) const;
};

// RFC 4180 style: comma separated, double-quoted fields with "" escapes,
// LF or CRLF line ends, optional UTF-8 byte order mark. Every row must have
// as many fields as the header.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest text that parses back to the same double ("%.17g").
std::string format_double(double v);
double parse_double(std::string_view text, std::string_view what);

// ---- cohort files --------------------------------------------------------------

struct CohortCsvOptions {
    std::string exposure_column = "exposure";
    std::string id_column = "id";
    std::string true_propensity_column = "true_propensity";
};

// Rows of a cohort file before a sampling design is attached.
struct CohortTable {
    Matrix covariates;
    std::vector<double> exposure;
    std::vector<std::string> ids; // empty when the file has no id column
    std::vector<std::string> covariate_names;
    std::optional<std::vector<double>> true_propensity;

    std::size_t num_exposed() const;
};

// Every column other than the exposure, id and true-propensity columns is
// a numeric covariate. Missing values, non-binary exposure and non-numeric
// covariates are rejected with the offending line and column.
CohortTable read_cohort_csv(std::istream& in, const CohortCsvOptions& options = {});
CohortTable read_cohort_csv_file(const std::string& path, const CohortCsvOptions& options = {});

// id, covariates..., exposure[, true_propensity]
void write_cohort_csv(std::ostream& out, const Cohort& cohort, const CohortCsvOptions& options = {});

// ---- experiment outputs ------------------------------------------------------

// variant,n,C,rep,seed,mean_abs_bias,mean_mse,alpha_1..alpha_L
void write_records_csv(std::ostream& out, const std::vector<eval::ReplicationRecord>& records,
                       std::size_t n_learners);
std::vector<eval::ReplicationRecord> read_records_csv(std::istream& in);

// variant,n,C,reps,pct_bias,mse,rel_eff (rel_eff is NA for unweighted
// variants)
void write_report_csv(std::ostream& out, const std::vector<eval::CellSummary>& cells);
std::vector<eval::CellSummary> read_report_csv(std::istream& in);

} // namespace wps::io
