#ifndef OMICSFLOW_CORE_CSV_HPP
#define OMICSFLOW_CORE_CSV_HPP

#include "errors.hpp"

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

/**
 * @file csv.hpp
 * @brief Minimal delimited-text reading and writing.
 *
 * Cells are never quoted in the formats this library handles, so a plain split is sufficient.
 * The delimiter is inferred from the header line: tab if it contains a tab and no comma, otherwise comma.
 */

namespace omicsflow::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    /// 1-based line number in the source file for each row, for error messages.
    std::vector<std::size_t> line_numbers;
};

inline std::vector<std::string> split(std::string_view line, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline Table parse(std::istream& in, const std::string& source_name) {
    Table table;
    std::string line;
    std::size_t lineno = 0;
    char delim = ',';
    bool have_header = false;

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (trim(line).empty()) {
            continue;
        }
        if (!have_header) {
            // Strip a UTF-8 byte order mark if present.
            if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
                line.erase(0, 3);
            }
            if (line.find('\t') != std::string::npos && line.find(',') == std::string::npos) {
                delim = '\t';
            }
            for (auto& cell : split(line, delim)) {
                table.header.emplace_back(trim(cell));
            }
            have_header = true;
            continue;
        }
        std::vector<std::string> cells;
        for (auto& cell : split(line, delim)) {
            cells.emplace_back(trim(cell));
        }
        if (cells.size() != table.header.size()) {
            throw DataError(source_name + ": ragged row at line " + std::to_string(lineno) + " (expected " +
                            std::to_string(table.header.size()) + " cells, found " + std::to_string(cells.size()) + ")");
        }
        table.rows.push_back(std::move(cells));
        table.line_numbers.push_back(lineno);
    }

    if (!have_header) {
        throw DataError(source_name + ": empty file");
    }
    return table;
}

inline Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path);
    }
    return parse(in, path);
}

inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (s.empty()) {
        return std::nullopt;
    }
    if (s.front() == '+') {
        s.remove_prefix(1);
    }
    double value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return value;
}

inline std::optional<long long> parse_int(std::string_view s) {
    s = trim(s);
    if (s.empty()) {
        return std::nullopt;
    }
    if (s.front() == '+') {
        s.remove_prefix(1);
    }
    long long value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return value;
}

/**
 * Shortest decimal representation that parses back to exactly `value`.
 */
inline std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path);
    }
    out << content;
    if (!out) {
        throw DataError("failed while writing " + path);
    }
}

}

#endif
