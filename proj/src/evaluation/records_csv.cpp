#include "wps/io.hpp"

#include <charconv>
#include <istream>
#include <ostream>

namespace wps::io {

namespace {

const std::vector<std::string> kRecordColumns{"variant", "n", "C", "rep", "seed", "mean_abs_bias", "mean_mse"};
const std::vector<std::string> kReportColumns{"variant", "n", "C", "reps", "pct_bias", "mse", "rel_eff"};

template <class T>
T parse_unsigned(const std::string& text, std::size_t line, std::string_view what)
{
    T v{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
        throw InputError("line " + std::to_string(line) + ": " + std::string(what) + " '" + text +
                             "' is not a non-negative integer",
                         line);
    }
    return v;
}

double parse_field(const std::string& text, std::size_t line, std::string_view what)
{
    try {
        return parse_double(text, what);
    } catch (const InputError& e) {
        throw InputError("line " + std::to_string(line) + ": " + e.what(), line);
    }
}

void check_header(const CsvTable& t, const std::vector<std::string>& fixed, std::string_view kind)
{
    for (std::size_t j = 0; j < fixed.size(); ++j) {
        if (j >= t.header.size() || t.header[j] != fixed[j]) {
            throw InputError(std::string(kind) + ": column " + std::to_string(j + 1) + " must be '" + fixed[j] + "'", 1);
        }
    }
}

} // namespace

void write_records_csv(std::ostream& out, const std::vector<eval::ReplicationRecord>& records, std::size_t n_learners)
{
    std::vector<std::string> header = kRecordColumns;
    for (std::size_t l = 0; l < n_learners; ++l) header.push_back("alpha_" + std::to_string(l + 1));
    write_csv_row(out, header);
    std::vector<std::string> f;
    for (const auto& r : records) {
        if (r.alpha.size() != n_learners) throw std::invalid_argument("records: alpha length differs from library size");
        f = {std::string(eval::variant_name(r.variant)), std::to_string(r.n_exposed), format_double(r.controls_per_case),
             std::to_string(r.replication), std::to_string(r.seed), format_double(r.mean_abs_bias),
             format_double(r.mean_mse)};
        for (double a : r.alpha) f.push_back(format_double(a));
        write_csv_row(out, f);
    }
}

std::vector<eval::ReplicationRecord> read_records_csv(std::istream& in)
{
    const CsvTable t = read_csv(in);
    check_header(t, kRecordColumns, "records file");
    const std::size_t n_learners = t.header.size() - kRecordColumns.size();
    for (std::size_t l = 0; l < n_learners; ++l) {
        if (t.header[kRecordColumns.size() + l] != "alpha_" + std::to_string(l + 1)) {
            throw InputError("records file: expected column alpha_" + std::to_string(l + 1), 1);
        }
    }
    std::vector<eval::ReplicationRecord> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::size_t line = t.line_of[r];
        eval::ReplicationRecord rec;
        try {
            rec.variant = eval::parse_variant(row[0]);
        } catch (const std::invalid_argument& e) {
            throw InputError("line " + std::to_string(line) + ": " + e.what(), line);
        }
        rec.n_exposed = parse_unsigned<std::size_t>(row[1], line, "n");
        rec.controls_per_case = parse_field(row[2], line, "C");
        rec.replication = parse_unsigned<std::size_t>(row[3], line, "rep");
        rec.seed = parse_unsigned<std::uint64_t>(row[4], line, "seed");
        rec.mean_abs_bias = parse_field(row[5], line, "mean_abs_bias");
        rec.mean_mse = parse_field(row[6], line, "mean_mse");
        for (std::size_t l = 0; l < n_learners; ++l) {
            rec.alpha.push_back(parse_field(row[kRecordColumns.size() + l], line, "alpha"));
        }
        out.push_back(std::move(rec));
    }
    return out;
}

void write_report_csv(std::ostream& out, const std::vector<eval::CellSummary>& cells)
{
    write_csv_row(out, kReportColumns);
    for (const auto& c : cells) {
        write_csv_row(out, {std::string(eval::variant_name(c.variant)), std::to_string(c.n_exposed),
                            format_double(c.controls_per_case), std::to_string(c.replications),
                            format_double(c.pct_bias), format_double(c.mse),
                            c.rel_eff ? format_double(*c.rel_eff) : "NA"});
    }
}

std::vector<eval::CellSummary> read_report_csv(std::istream& in)
{
    const CsvTable t = read_csv(in);
    check_header(t, kReportColumns, "report file");
    if (t.header.size() != kReportColumns.size()) throw InputError("report file: unexpected extra columns", 1);
    std::vector<eval::CellSummary> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::size_t line = t.line_of[r];
        eval::CellSummary c;
        try {
            c.variant = eval::parse_variant(row[0]);
        } catch (const std::invalid_argument& e) {
            throw InputError("line " + std::to_string(line) + ": " + e.what(), line);
        }
        c.n_exposed = parse_unsigned<std::size_t>(row[1], line, "n");
        c.controls_per_case = parse_field(row[2], line, "C");
        c.replications = parse_unsigned<std::size_t>(row[3], line, "reps");
        c.pct_bias = parse_field(row[4], line, "pct_bias");
        c.mse = parse_field(row[5], line, "mse");
        if (row[6] != "NA") c.rel_eff = parse_field(row[6], line, "rel_eff");
        out.push_back(std::move(c));
    }
    return out;
}

} // namespace wps::io
