#pragma once

// Strict CSV ingest (comma-separated, '.' decimal, optional header, no
// missing cells) and deterministic 17-significant-digit writers.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "transell/data.hpp"
#include "transell/errors.hpp"

namespace transell {

namespace detail {

inline std::vector<std::string> split_csv_line(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

inline bool parse_cell(const std::string& cell, double& value) {
    // trim ASCII whitespace
    std::size_t b = cell.find_first_not_of(" \t");
    if (b == std::string::npos) return false;
    std::size_t e = cell.find_last_not_of(" \t");
    std::string tok = cell.substr(b, e - b + 1);
    const char* c = tok.c_str();
    char* end = nullptr;
    value = std::strtod(c, &end);
    if (end != c + tok.size()) return false;
    return std::isfinite(value);  // NaN/Inf cells are hard errors
}

/// %.17g: round-trips every double and keeps artifacts byte-deterministic.
inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// Reads an n x d numeric matrix. A first line whose cells are not all
/// numeric is taken as the header; every other non-numeric, missing, or
/// non-finite cell is an error naming its row and column (1-based).
inline DataMatrix read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvParseError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::vector<std::string> names;
    std::string line;
    long lineno = 0;
    std::size_t width = 0;
    bool saw_first = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        auto cells = detail::split_csv_line(line);
        if (!saw_first) {
            saw_first = true;
            width = cells.size();
            std::vector<double> vals(cells.size());
            bool numeric = true;
            for (std::size_t c = 0; c < cells.size(); ++c)
                if (!detail::parse_cell(cells[c], vals[c])) {
                    numeric = false;
                    break;
                }
            if (numeric) {
                rows.push_back(std::move(vals));
            } else {
                names.assign(cells.begin(), cells.end());
            }
            continue;
        }
        if (cells.size() != width)
            throw CsvParseError("row " + std::to_string(lineno) + ": expected " +
                                std::to_string(width) + " columns, got " +
                                std::to_string(cells.size()));
        std::vector<double> vals(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c)
            if (!detail::parse_cell(cells[c], vals[c]))
                throw CsvParseError("row " + std::to_string(lineno) + ", column " +
                                    std::to_string(c + 1) + ": bad numeric cell '" + cells[c] +
                                    "'");
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw CsvParseError(path + ": no data rows");
    DataMatrix m;
    m.values.resize(static_cast<long>(rows.size()), static_cast<long>(width));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < width; ++c) m.values(r, c) = rows[r][c];
    m.names = names.empty() ? DataMatrix::default_names(static_cast<int>(width)) : names;
    return m;
}

inline void write_csv(const std::string& path, const DataMatrix& m) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    for (int c = 0; c < m.d(); ++c) out << (c ? "," : "") << m.names[c];
    out << "\n";
    for (long r = 0; r < m.n(); ++r) {
        for (int c = 0; c < m.d(); ++c)
            out << (c ? "," : "") << detail::format_real(m.values(r, c));
        out << "\n";
    }
    if (!out) throw Error("write failed for " + path);
}

/// Dense matrix CSV, header row of column names, row-major body.
inline void write_matrix_csv(const std::string& path, const Matrix& a,
                             const std::vector<std::string>& names) {
    DataMatrix m;
    m.values = a;
    m.names = names.size() == static_cast<std::size_t>(a.cols())
                  ? names
                  : DataMatrix::default_names(static_cast<int>(a.cols()));
    write_csv(path, m);
}

}  // namespace transell
