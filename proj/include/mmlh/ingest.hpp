#pragma once

#include "mmlh/events.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace mmlh::ingest {

/// Real-valued series sharing one time index, one column per node.
struct SeriesTable {
    std::string index_name;
    std::vector<std::string> index; // dates or sample labels, in file order
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;

    [[nodiscard]] std::size_t rows() const noexcept { return index.size(); }
    [[nodiscard]] std::size_t series() const noexcept { return columns.size(); }
};

struct LoadOptions {
    char delimiter{','};
    /// Series to keep, in this order. Empty keeps every column after the first.
    std::vector<std::string> columns;
};

/// Header row, then one row per sample: the first column is the index, the
/// rest are numbers. Throws DataError on ragged rows, empty or non-numeric
/// cells (with the 1-based file line) and unknown requested columns.
[[nodiscard]] SeriesTable load_csv(std::istream& in, const LoadOptions& options = {});
[[nodiscard]] SeriesTable load_csv(const std::string& path, const LoadOptions& options = {});

struct ExtractOptions {
    std::size_t window{252};
    double quantile{0.2};
    double horizon{400.0};
};

/// Rolling-window shock events. Sample r (1-based, r >= window) of a series
/// fires when fewer than ceil(quantile * window) values in samples
/// r - window + 1 .. r are strictly greater than sample r, so ties with the
/// cutoff count as shocks. Firing sample r is placed at
///   t = horizon * (r - window + 1) / (L - window + 1),
/// which spreads the usable samples evenly over (0, horizon].
[[nodiscard]] EventData extract_events(const SeriesTable& table, const ExtractOptions& options = {});

} // namespace mmlh::ingest
