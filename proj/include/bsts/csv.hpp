#pragma once

// Daily-series CSV format: header row `date,<name>,...`, ISO dates in the
// first column, one value column per series, empty cell = missing. Rows must
// be consecutive calendar days. Column names may not contain commas.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "bsts/calendar.hpp"
#include "bsts/errors.hpp"
#include "bsts/series.hpp"

namespace bsts {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell += c;
        }
    }
    cells.push_back(cell);
    return cells;
}

}  // namespace detail

inline std::vector<DateIndexedSeries> load_csv(std::istream& in,
                                               const std::string& date_column = "date") {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("csv: empty input, header required");
    const std::vector<std::string> header = detail::split_csv_line(line);
    if (header.empty() || header[0] != date_column) {
        throw ParseError("csv: first header column must be '" + date_column + "'");
    }
    if (header.size() < 2) throw ParseError("csv: no series columns");
    std::unordered_set<std::string> seen;
    for (std::size_t j = 1; j < header.size(); ++j) {
        if (header[j].empty()) throw ParseError("csv: empty column name in header");
        if (!seen.insert(header[j]).second) {
            throw DuplicateColumn("csv: duplicate column '" + header[j] + "'");
        }
    }

    const std::size_t n_series = header.size() - 1;
    std::vector<std::vector<double>> columns(n_series);
    Date start;
    Date previous;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        ++row;
        const std::vector<std::string> cells = detail::split_csv_line(line);
        if (cells.size() != header.size()) {
            throw ParseError("csv: row " + std::to_string(row) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(header.size()));
        }
        Date d;
        try {
            d = Date::parse(cells[0]);
        } catch (const ParseError& e) {
            throw UnparseableValue(row, date_column, "csv: row " + std::to_string(row) + ": " +
                                                         e.what());
        }
        if (row == 1) {
            start = d;
        } else if (d - previous != 1) {
            throw NonContiguousDates("csv: dates must be consecutive days; gap between " +
                                     previous.to_string() + " and " + d.to_string());
        }
        previous = d;
        for (std::size_t j = 0; j < n_series; ++j) {
            const std::string& cell = cells[j + 1];
            if (cell.empty()) {
                columns[j].push_back(kMissing);
                continue;
            }
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end != cell.c_str() + cell.size()) {
                throw UnparseableValue(row, header[j + 1],
                                       "csv: row " + std::to_string(row) + ", column '" +
                                           header[j + 1] + "': cannot parse '" + cell + "'");
            }
            columns[j].push_back(v);
        }
    }
    if (row == 0) throw ParseError("csv: no data rows");

    std::vector<DateIndexedSeries> out;
    out.reserve(n_series);
    for (std::size_t j = 0; j < n_series; ++j) {
        out.emplace_back(header[j + 1], start, std::move(columns[j]));
    }
    return out;
}

inline std::vector<DateIndexedSeries> load_csv(const std::filesystem::path& path,
                                               const std::string& date_column = "date") {
    std::ifstream in(path);
    if (!in) throw Error("cannot open csv file: " + path.string());
    try {
        return load_csv(in, date_column);
    } catch (const UnparseableValue& e) {
        throw UnparseableValue(e.row, e.column, path.string() + ": " + e.what());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (const NonContiguousDates& e) {
        throw NonContiguousDates(path.string() + ": " + e.what());
    } catch (const DuplicateColumn& e) {
        throw DuplicateColumn(path.string() + ": " + e.what());
    }
}

/// All series must share the same start date and length.
inline void write_csv(std::ostream& out, const std::vector<DateIndexedSeries>& series,
                      const std::string& date_column = "date") {
    if (series.empty()) throw Error("csv: nothing to write");
    const Date start = series[0].start_date;
    const std::size_t n = series[0].size();
    out << date_column;
    for (const auto& s : series) {
        if (s.start_date != start || s.size() != n) {
            throw Error("csv: series must share start date and length");
        }
        if (s.name.find(',') != std::string::npos) {
            throw Error("csv: column name may not contain a comma: '" + s.name + "'");
        }
        out << ',' << s.name;
    }
    out << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t t = 0; t < n; ++t) {
        out << (start + static_cast<long>(t)).to_string();
        for (const auto& s : series) {
            out << ',';
            if (!is_missing(s.values[t])) out << s.values[t];
        }
        out << '\n';
    }
}

inline void write_csv(const std::filesystem::path& path,
                      const std::vector<DateIndexedSeries>& series,
                      const std::string& date_column = "date") {
    std::ofstream out(path);
    if (!out) throw Error("cannot open csv file for writing: " + path.string());
    write_csv(out, series, date_column);
}

}  // namespace bsts
