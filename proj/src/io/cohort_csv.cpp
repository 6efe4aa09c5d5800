#include "wps/io.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

namespace wps::io {

std::size_t CohortTable::num_exposed() const
{
    std::size_t n = 0;
    for (double e : exposure) n += e == 1.0 ? 1 : 0;
    return n;
}

namespace {

bool is_missing(const std::string& f)
{
    std::string_view v(f);
    while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.remove_prefix(1);
    while (!v.empty() && (v.back() == ' ' || v.back() == '\t')) v.remove_suffix(1);
    return v.empty() || v == "NA" || v == "na" || v == "NaN" || v == "nan" || v == "null" || v == ".";
}

} // namespace

CohortTable read_cohort_csv(std::istream& in, const CohortCsvOptions& options)
{
    const CsvTable t = read_csv(in);
    const auto exposure_col = t.column(options.exposure_column);
    if (!exposure_col) throw InputError("exposure column '" + options.exposure_column + "' not found in header", 1);
    const auto id_col = t.column(options.id_column);
    const auto tp_col = t.column(options.true_propensity_column);

    std::vector<std::size_t> cov_cols;
    CohortTable out;
    for (std::size_t j = 0; j < t.header.size(); ++j) {
        if (j == *exposure_col || (id_col && j == *id_col) || (tp_col && j == *tp_col)) continue;
        cov_cols.push_back(j);
        out.covariate_names.push_back(t.header[j]);
    }
    if (cov_cols.empty()) throw InputError("no covariate columns besides the exposure column", 1);
    if (t.rows.empty()) throw InputError("cohort file has no data rows", 1);

    const std::size_t n = t.rows.size();
    out.covariates = Matrix(n, cov_cols.size());
    out.exposure.resize(n);
    if (tp_col) out.true_propensity.emplace(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto& row = t.rows[r];
        const std::size_t line = t.line_of[r];
        auto where = [&](std::size_t j) { return "line " + std::to_string(line) + ", column '" + t.header[j] + "'"; };

        const std::string& ef = row[*exposure_col];
        if (is_missing(ef)) throw InputError(where(*exposure_col) + ": missing exposure", line);
        double e = 0.0;
        try {
            e = parse_double(ef, "exposure");
        } catch (const InputError&) {
            throw InputError(where(*exposure_col) + ": exposure '" + ef + "' is not 0 or 1", line);
        }
        if (e != 0.0 && e != 1.0) throw InputError(where(*exposure_col) + ": exposure '" + ef + "' is not 0 or 1", line);
        out.exposure[r] = e;

        for (std::size_t k = 0; k < cov_cols.size(); ++k) {
            const std::size_t j = cov_cols[k];
            if (is_missing(row[j])) throw InputError(where(j) + ": missing value", line);
            double v = 0.0;
            try {
                v = parse_double(row[j], "covariate");
            } catch (const InputError&) {
                throw InputError(where(j) + ": '" + row[j] + "' is not numeric", line);
            }
            if (!std::isfinite(v)) throw InputError(where(j) + ": '" + row[j] + "' is not finite", line);
            out.covariates(r, k) = v;
        }
        if (tp_col) {
            const std::string& f = row[*tp_col];
            if (is_missing(f)) throw InputError(where(*tp_col) + ": missing value", line);
            double p = 0.0;
            try {
                p = parse_double(f, "true propensity");
            } catch (const InputError&) {
                throw InputError(where(*tp_col) + ": '" + f + "' is not numeric", line);
            }
            if (!(p >= 0.0 && p <= 1.0)) throw InputError(where(*tp_col) + ": '" + f + "' is not a probability", line);
            (*out.true_propensity)[r] = p;
        }
        if (id_col) {
            if (row[*id_col].empty()) throw InputError(where(*id_col) + ": empty row id", line);
            out.ids.push_back(row[*id_col]);
        }
    }
    return out;
}

CohortTable read_cohort_csv_file(const std::string& path, const CohortCsvOptions& options)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    try {
        return read_cohort_csv(in, options);
    } catch (const InputError& e) {
        throw InputError(path + ": " + e.what(), e.line());
    }
}

void write_cohort_csv(std::ostream& out, const Cohort& cohort, const CohortCsvOptions& options)
{
    std::vector<std::string> header{options.id_column};
    for (std::size_t j = 0; j < cohort.num_covariates(); ++j) {
        header.push_back(cohort.covariate_names().empty() ? "x" + std::to_string(j + 1) : cohort.covariate_names()[j]);
    }
    header.push_back(options.exposure_column);
    const auto& tp = cohort.true_propensity();
    if (tp) header.push_back(options.true_propensity_column);
    write_csv_row(out, header);

    std::vector<std::string> fields;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        fields.clear();
        fields.push_back(cohort.ids()[i]);
        for (double v : cohort.covariates().row(i)) fields.push_back(format_double(v));
        fields.push_back(cohort.exposure()[i] == 1.0 ? "1" : "0");
        if (tp) fields.push_back(format_double((*tp)[i]));
        write_csv_row(out, fields);
    }
}

} // namespace wps::io
