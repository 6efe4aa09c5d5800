#include "wps/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

namespace wps::io {

std::optional<std::size_t> CsvTable::column(std::string_view name) const
{
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == name) return j;
    }
    return std::nullopt;
}

namespace {

// Splits one record; a quoted field may span physical lines, so the reader
// pulls more lines from `in` while a quote is open.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line_no)
{
    std::string line;
    if (!std::getline(in, line)) return false;
    ++line_no;
    const std::size_t start_line = line_no;
    fields.clear();
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    for (;;) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        for (std::size_t i = 0; i < line.size(); ++i) {
            const char ch = line[i];
            if (quoted) {
                if (ch == '"') {
                    if (i + 1 < line.size() && line[i + 1] == '"') {
                        field += '"';
                        ++i;
                    } else {
                        quoted = false;
                    }
                } else {
                    field += ch;
                }
            } else if (ch == '"') {
                if (!field.empty()) throw InputError("stray quote inside an unquoted field", line_no);
                quoted = true;
                was_quoted = true;
            } else if (ch == ',') {
                fields.push_back(std::move(field));
                field.clear();
                was_quoted = false;
            } else {
                if (was_quoted) throw InputError("text after a closing quote", line_no);
                field += ch;
            }
        }
        if (!quoted) break;
        field += '\n';
        if (!std::getline(in, line)) throw InputError("unterminated quoted field", start_line);
        ++line_no;
    }
    fields.push_back(std::move(field));
    return true;
}

} // namespace

CsvTable read_csv(std::istream& in)
{
    CsvTable t;
    std::size_t line_no = 0;
    if (!read_record(in, t.header, line_no)) throw InputError("empty file: a header row is required", 1);
    if (!t.header.empty() && t.header[0].rfind("\xEF\xBB\xBF", 0) == 0) t.header[0].erase(0, 3);
    for (std::size_t j = 0; j < t.header.size(); ++j) {
        for (std::size_t k = 0; k < j; ++k) {
            if (t.header[j] == t.header[k]) throw InputError("duplicate column name '" + t.header[j] + "'", 1);
        }
    }
    std::vector<std::string> fields;
    while (read_record(in, fields, line_no)) {
        if (fields.size() == 1 && fields[0].empty()) continue; // blank line
        if (fields.size() != t.header.size()) {
            throw InputError("expected " + std::to_string(t.header.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        t.rows.push_back(fields);
        t.line_of.push_back(line_no);
    }
    return t;
}

CsvTable read_csv_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    try {
        return read_csv(in);
    } catch (const InputError& e) {
        throw InputError(path + ":" + std::to_string(e.line()) + ": " + e.what(), e.line());
    }
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields)
{
    for (std::size_t j = 0; j < fields.size(); ++j) {
        if (j > 0) out << ',';
        const std::string& f = fields[j];
        if (f.find_first_of(",\"\n\r") == std::string::npos) {
            out << f;
        } else {
            out << '"';
            for (char ch : f) {
                if (ch == '"') out << '"';
                out << ch;
            }
            out << '"';
        }
    }
    out << '\n';
}

std::string format_double(double v)
{
    if (std::isnan(v)) return "NA";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(std::string_view text, std::string_view what)
{
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
        throw InputError(std::string(what) + ": '" + std::string(text) + "' is not a number");
    }
    return v;
}

} // namespace wps::io
