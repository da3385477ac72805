#include "mobifair/geo.hpp"
#include "mobifair/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace mobifair {

namespace {

constexpr double kMilesPerDegree = 69.0;
constexpr double kPi = 3.14159265358979323846;

double miles_per_degree_lon(double origin_lat) {
    return kMilesPerDegree * std::cos(origin_lat * kPi / 180.0);
}

bool parse_double(std::string_view s, double& out) {
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end;
}

bool parse_i64(std::string_view s, std::int64_t& out) {
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end;
}

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

} // namespace

int Grid::rows() const {
    return static_cast<int>(std::ceil(length_miles / cell_size_miles));
}

int Grid::cols() const {
    return static_cast<int>(std::ceil(width_miles / cell_size_miles));
}

void Grid::validate() const {
    if (!(width_miles > 0) || !(length_miles > 0))
        throw config_error("grid: width and length must be positive");
    if (!(cell_size_miles > 0) || cell_size_miles > std::min(width_miles, length_miles))
        throw config_error("grid: cell_size must satisfy 0 < C <= min(w, l)");
    if (!(origin_lat >= -90.0 && origin_lat <= 90.0 && origin_lon >= -180.0 &&
          origin_lon <= 180.0))
        throw config_error("grid: origin out of lat/lon range");
}

ParseResult parse_trajectories(std::string_view csv) {
    ParseResult result;

    std::size_t pos = 0;
    auto next_line = [&](std::string_view& line) {
        if (pos >= csv.size()) return false;
        std::size_t nl = csv.find('\n', pos);
        if (nl == std::string_view::npos) {
            line = csv.substr(pos);
            pos = csv.size();
        } else {
            line = csv.substr(pos, nl - pos);
            pos = nl + 1;
        }
        line = strip_cr(line);
        return true;
    };

    std::string_view header;
    if (!next_line(header) || header != "user_id,timestamp,lat,lon")
        throw data_error("trajectory csv: malformed header, expected user_id,timestamp,lat,lon");

    std::string_view line;
    std::size_t row_no = 1;
    while (next_line(line)) {
        ++row_no;
        if (line.empty()) continue;
        ++result.total_rows;

        std::string_view fields[4];
        std::size_t n_fields = 0, start = 0;
        bool overflow = false;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                if (n_fields == 4) {
                    overflow = true;
                    break;
                }
                fields[n_fields++] = line.substr(start, i - start);
                start = i + 1;
            }
        }

        std::string why;
        GeoPoint p;
        if (overflow || n_fields != 4) {
            why = "expected 4 fields";
        } else if (fields[0].empty()) {
            why = "empty user_id";
        } else if (!parse_i64(fields[1], p.timestamp) || p.timestamp < 0) {
            why = "bad timestamp";
        } else if (!parse_double(fields[2], p.lat) || !(p.lat >= -90.0 && p.lat <= 90.0)) {
            why = "bad lat"; // the conjunction form also rejects NaN
        } else if (!parse_double(fields[3], p.lon) || !(p.lon >= -180.0 && p.lon <= 180.0)) {
            why = "bad lon";
        }

        if (!why.empty()) {
            ++result.bad_rows;
            if (result.diagnostics.size() < 20)
                result.diagnostics.push_back("row " + std::to_string(row_no) + ": " + why);
            continue;
        }

        auto& traj = result.trajectories[std::string(fields[0])];
        traj.user_id = fields[0];
        traj.points.push_back(p);
    }

    if (result.total_rows > 0 && result.bad_rows * 2 > result.total_rows) {
        std::ostringstream os;
        os << "trajectory csv: " << result.bad_rows << " of " << result.total_rows
           << " rows unparseable";
        for (const auto& d : result.diagnostics) os << "\n  " << d;
        throw data_error(os.str());
    }

    for (auto& [id, traj] : result.trajectories)
        std::stable_sort(traj.points.begin(), traj.points.end(),
                         [](const GeoPoint& a, const GeoPoint& b) { return a.timestamp < b.timestamp; });

    return result;
}

DiscretizeResult discretize(const Trajectory& traj, const Grid& grid) {
    grid.validate();
    const double lon_scale = miles_per_degree_lon(grid.origin_lat);
    const int n_rows = grid.rows();
    const int n_cols = grid.cols();

    DiscretizeResult result;
    result.seq.user_id = traj.user_id;
    result.seq.cells.reserve(traj.points.size());

    for (const GeoPoint& p : traj.points) {
        const double dy = (p.lat - grid.origin_lat) * kMilesPerDegree;
        const double dx = (p.lon - grid.origin_lon) * lon_scale;
        const int row = static_cast<int>(std::floor(dy / grid.cell_size_miles));
        const int col = static_cast<int>(std::floor(dx / grid.cell_size_miles));
        if (row < 0 || row >= n_rows || col < 0 || col >= n_cols) {
            ++result.dropped;
            continue;
        }
        result.seq.cells.emplace_back(p.timestamp, CellId{row, col});
    }

    if (result.seq.cells.empty())
        throw data_error("empty discretization for user " + traj.user_id);
    return result;
}

GeoPoint cell_center(const Grid& grid, CellId cell) {
    const double dy = (cell.row + 0.5) * grid.cell_size_miles;
    const double dx = (cell.col + 0.5) * grid.cell_size_miles;
    GeoPoint p;
    p.lat = grid.origin_lat + dy / kMilesPerDegree;
    p.lon = grid.origin_lon + dx / miles_per_degree_lon(grid.origin_lat);
    return p;
}

DailyLocationSequence daily_last_locations(const CellSequence& seq,
                                           std::int64_t day_length_seconds) {
    if (seq.cells.empty()) throw data_error("daily_last_locations: empty sequence");
    if (day_length_seconds <= 0) throw config_error("day_length_seconds must be positive");

    DailyLocationSequence out;
    out.user_id = seq.user_id;
    // ts >= max keeps the last observation in input order on timestamp ties
    std::map<std::int64_t, std::pair<std::int64_t, CellId>> best_by_day;
    for (const auto& [ts, cell] : seq.cells) {
        auto [it, inserted] = best_by_day.try_emplace(ts / day_length_seconds, ts, cell);
        if (!inserted && ts >= it->second.first) it->second = {ts, cell};
    }
    out.days.reserve(best_by_day.size());
    for (const auto& [day, entry] : best_by_day) out.days.emplace_back(day, entry.second);
    return out;
}

} // namespace mobifair
