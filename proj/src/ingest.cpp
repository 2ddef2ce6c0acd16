#include "mmlh/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

namespace mmlh::ingest {

namespace {

std::vector<std::string> split_row(const std::string& line, char delimiter) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delimiter, start);
        std::string cell = line.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
        const auto first = cell.find_first_not_of(" \t\r\"");
        const auto last = cell.find_last_not_of(" \t\r\"");
        cells.push_back(first == std::string::npos ? std::string{} : cell.substr(first, last - first + 1));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return cells;
}

double parse_cell(const std::string& cell, std::size_t line_no, const std::string& column) {
    const auto where = " at line " + std::to_string(line_no) + ", column '" + column + "'";
    if (cell.empty()) throw DataError("missing value" + where);
    double value = 0.0;
    const char* first = cell.data();
    const char* last = first + cell.size();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
        throw DataError("non-numeric value '" + cell + "'" + where);
    }
    return value;
}

} // namespace

SeriesTable load_csv(std::istream& in, const LoadOptions& options) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        header = split_row(line, options.delimiter);
        break;
    }
    if (header.size() < 2) throw DataError("series file needs a header with an index column and at least one series");

    std::vector<std::size_t> keep; // header positions of the selected series
    if (options.columns.empty()) {
        for (std::size_t c = 1; c < header.size(); ++c) keep.push_back(c);
    } else {
        for (const auto& name : options.columns) {
            const auto it = std::find(header.begin() + 1, header.end(), name);
            if (it == header.end()) throw DataError("unknown column '" + name + "'");
            keep.push_back(static_cast<std::size_t>(it - header.begin()));
        }
    }

    SeriesTable table;
    table.index_name = header.front();
    for (auto c : keep) table.names.push_back(header[c]);
    table.columns.resize(keep.size());
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_row(line, options.delimiter);
        if (cells.size() != header.size()) {
            throw DataError("line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                            " fields, header has " + std::to_string(header.size()));
        }
        table.index.push_back(cells.front());
        for (std::size_t s = 0; s < keep.size(); ++s) {
            table.columns[s].push_back(parse_cell(cells[keep[s]], line_no, header[keep[s]]));
        }
    }
    if (table.rows() == 0) throw DataError("series file has no data rows");
    return table;
}

SeriesTable load_csv(const std::string& path, const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open series file '" + path + "'");
    return load_csv(in, options);
}

EventData extract_events(const SeriesTable& table, const ExtractOptions& options) {
    const auto rows = table.rows();
    const auto w = options.window;
    if (w == 0) throw UsageError("window must be positive");
    if (!(options.quantile > 0.0 && options.quantile < 1.0)) throw UsageError("quantile must lie in (0, 1)");
    if (!(options.horizon > 0.0)) throw UsageError("horizon must be positive");
    if (w > rows) {
        throw DataError("window of " + std::to_string(w) + " samples exceeds series length " + std::to_string(rows));
    }
    // Guard against q * w landing a hair above an integer.
    const auto top = static_cast<std::size_t>(std::ceil(options.quantile * static_cast<double>(w) - 1e-9));
    const double usable = static_cast<double>(rows - w + 1);

    std::vector<std::vector<double>> times(table.series());
    for (std::size_t s = 0; s < table.series(); ++s) {
        const auto& x = table.columns[s];
        for (std::size_t r = w - 1; r < rows; ++r) {
            std::size_t greater = 0;
            for (std::size_t q = r + 1 - w; q < r; ++q) greater += x[q] > x[r];
            if (greater < top) {
                times[s].push_back(options.horizon * static_cast<double>(r + 2 - w) / usable);
            }
        }
    }
    return validate_events(std::move(times), options.horizon);
}

} // namespace mmlh::ingest
