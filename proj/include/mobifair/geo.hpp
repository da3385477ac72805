#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mobifair {

struct GeoPoint {
    std::int64_t timestamp = 0; // Unix seconds
    double lat = 0.0;
    double lon = 0.0;
};

struct Trajectory {
    std::string user_id;
    std::vector<GeoPoint> points; // sorted non-decreasing by timestamp
};

// Rectangular analysis area anchored at its southwest corner. Cells are
// square with side cell_size_miles; the area is padded up to whole cells,
// so a point is inside iff its cell indices are in range.
struct Grid {
    double origin_lat = 0.0;
    double origin_lon = 0.0;
    double width_miles = 0.0;  // east-west extent
    double length_miles = 0.0; // north-south extent
    double cell_size_miles = 0.0;

    int rows() const;
    int cols() const;
    void validate() const; // throws config_error
};

struct CellId {
    int row = 0;
    int col = 0;
    auto operator<=>(const CellId&) const = default;
};

struct CellSequence {
    std::string user_id;
    std::vector<std::pair<std::int64_t, CellId>> cells; // (timestamp, cell), source order
};

struct DailyLocationSequence {
    std::string user_id;
    std::vector<std::pair<std::int64_t, CellId>> days; // (day_index, cell), strictly increasing
};

struct ParseResult {
    std::map<std::string, Trajectory> trajectories;
    std::size_t total_rows = 0;
    std::size_t bad_rows = 0;
    std::vector<std::string> diagnostics; // first few bad rows, for reporting
};

// CSV with header user_id,timestamp,lat,lon. LF or CRLF. Unparseable rows are
// counted; a malformed header or >50% bad rows is a hard data_error.
ParseResult parse_trajectories(std::string_view csv);

struct DiscretizeResult {
    CellSequence seq;
    std::size_t dropped = 0; // points outside the grid
};

DiscretizeResult discretize(const Trajectory& traj, const Grid& grid);

// Latitude/longitude of a cell's center, the inverse of discretize's binning.
GeoPoint cell_center(const Grid& grid, CellId cell);

// Keeps the last observation of each day; days without observations are absent.
DailyLocationSequence daily_last_locations(const CellSequence& seq,
                                           std::int64_t day_length_seconds = 86400);

} // namespace mobifair
