#include "dvars/tsv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "dvars/error.hpp"

namespace dvars {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

TimeSeriesVolume parse_tsv_matrix(std::string_view text, std::string source) {
    std::vector<double> values;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t line_no = 0;

    while (!text.empty()) {
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;

        std::size_t fields = 0;
        for (;;) {
            const auto sep = line.find_first_of("\t,");
            const std::string_view field = trim(line.substr(0, sep));
            double v = 0.0;
            const auto* first = field.data();
            const auto* last = field.data() + field.size();
            const auto [ptr, ec] = std::from_chars(first, last, v);
            if (field.empty() || ec != std::errc{} || ptr != last) {
                throw InvalidInput(source + ": row " + std::to_string(line_no) + ", column " +
                                   std::to_string(fields + 1) + ": not a number: \"" +
                                   std::string(field) + "\"");
            }
            values.push_back(v);
            ++fields;
            if (sep == std::string_view::npos) break;
            line.remove_prefix(sep + 1);
        }

        if (rows == 0) {
            cols = fields;
        } else if (fields != cols) {
            throw InvalidInput(source + ": ragged matrix, row " + std::to_string(line_no) + " has " +
                               std::to_string(fields) + " columns, expected " +
                               std::to_string(cols));
        }
        ++rows;
    }

    if (rows == 0) throw InvalidInput(source + ": empty matrix");
    if (cols < 2) {
        throw InvalidInput(source + ": time dimension < 2 (each row needs at least two columns)");
    }
    Geometry g;
    g.nx = rows;
    return TimeSeriesVolume(std::move(g), cols, std::move(values), std::move(source));
}

TimeSeriesVolume load_tsv_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_tsv_matrix(buf.str(), path.string());
}

}  // namespace dvars
