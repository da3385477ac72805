#include "mobifair/errors.hpp"
#include "mobifair/geo.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace mobifair;

namespace {

const Grid kGrid{47.0, -122.0, 1.0, 1.0, 0.25}; // 4x4 cells

GeoPoint at_miles(const Grid& g, double dx_miles, double dy_miles, std::int64_t ts = 0) {
    GeoPoint p;
    p.timestamp = ts;
    p.lat = g.origin_lat + dy_miles / 69.0;
    p.lon = g.origin_lon + dx_miles / (69.0 * std::cos(g.origin_lat * M_PI / 180.0));
    return p;
}

} // namespace

TEST_CASE("parse: empty body after valid header yields empty map") {
    const auto r = parse_trajectories("user_id,timestamp,lat,lon\n");
    CHECK(r.trajectories.empty());
    CHECK(r.total_rows == 0);
}

TEST_CASE("parse: malformed header is a hard error") {
    CHECK_THROWS_AS(parse_trajectories("uid,ts,lat,lon\nu,1,0,0\n"), data_error);
    CHECK_THROWS_AS(parse_trajectories(""), data_error);
}

TEST_CASE("parse: rows out of timestamp order are re-sorted") {
    const auto r = parse_trajectories(
        "user_id,timestamp,lat,lon\n"
        "u,30,1,1\n"
        "u,10,2,2\n"
        "u,20,3,3\n");
    const auto& pts = r.trajectories.at("u").points;
    REQUIRE(pts.size() == 3);
    CHECK(pts[0].timestamp == 10);
    CHECK(pts[1].timestamp == 20);
    CHECK(pts[2].timestamp == 30);
}

TEST_CASE("parse: groups rows by user") {
    const auto r = parse_trajectories(
        "user_id,timestamp,lat,lon\n"
        "a,1,0,0\n"
        "b,1,0,0\n"
        "a,2,0,0\n"
        "b,2,0,0\n");
    CHECK(r.trajectories.size() == 2);
    CHECK(r.trajectories.at("a").points.size() == 2);
    CHECK(r.trajectories.at("b").points.size() == 2);
}

TEST_CASE("parse: bad rows are counted, CRLF accepted") {
    const auto r = parse_trajectories(
        "user_id,timestamp,lat,lon\r\n"
        "a,1,0,0\r\n"
        "a,nope,0,0\r\n"
        "a,2,91,0\r\n"
        "a,3,0,0\r\n");
    CHECK(r.total_rows == 4);
    CHECK(r.bad_rows == 2);
    CHECK(r.trajectories.at("a").points.size() == 2);
    CHECK(r.diagnostics.size() == 2);
}

TEST_CASE("parse: more than half unparseable rows is a hard error") {
    CHECK_THROWS_AS(parse_trajectories("user_id,timestamp,lat,lon\n"
                                       "a,1,0,0\n"
                                       "a,x,0,0\n"
                                       "a,y,0,0\n"),
                    data_error);
}

TEST_CASE("parse: negative timestamp rejected per row") {
    const auto r = parse_trajectories(
        "user_id,timestamp,lat,lon\n"
        "a,-5,0,0\n"
        "a,5,0,0\n");
    CHECK(r.bad_rows == 1);
}

TEST_CASE("parse: nan and inf coordinates are rejected") {
    const auto r = parse_trajectories(
        "user_id,timestamp,lat,lon\n"
        "a,1,nan,0\n"
        "a,2,0,inf\n"
        "a,3,0,0\n"
        "a,4,1,1\n");
    CHECK(r.bad_rows == 2);
    CHECK(r.trajectories.at("a").points.size() == 2);
}

TEST_CASE("grid: dimensions by ceiling, validation") {
    CHECK(kGrid.rows() == 4);
    CHECK(kGrid.cols() == 4);
    const Grid ragged{47.0, -122.0, 1.0, 1.0, 0.3};
    CHECK(ragged.rows() == 4);

    Grid bad = kGrid;
    bad.cell_size_miles = 2.0;
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = kGrid;
    bad.width_miles = 0.0;
    CHECK_THROWS_AS(bad.validate(), config_error);
}

TEST_CASE("discretize: origin point lands in cell (0,0)") {
    Trajectory t{"u", {GeoPoint{0, kGrid.origin_lat, kGrid.origin_lon}}};
    const auto r = discretize(t, kGrid);
    REQUIRE(r.seq.cells.size() == 1);
    CHECK(r.seq.cells[0].second == CellId{0, 0});
    CHECK(r.dropped == 0);
}

TEST_CASE("discretize: 0.3 miles offset in a 0.25-mile grid is cell (1,1)") {
    Trajectory t{"u", {at_miles(kGrid, 0.3, 0.3)}};
    const auto r = discretize(t, kGrid);
    REQUIRE(r.seq.cells.size() == 1);
    CHECK(r.seq.cells[0].second == CellId{1, 1});
}

TEST_CASE("discretize: point west of the grid is dropped and counted") {
    Trajectory t{"u", {at_miles(kGrid, -0.1, 0.5), at_miles(kGrid, 0.5, 0.5, 1)}};
    const auto r = discretize(t, kGrid);
    CHECK(r.dropped == 1);
    CHECK(r.seq.cells.size() == 1);
}

TEST_CASE("discretize: all points outside is an error naming the user") {
    Trajectory t{"wanderer", {at_miles(kGrid, -1.0, 0.0)}};
    CHECK_THROWS_WITH_AS(discretize(t, kGrid), doctest::Contains("wanderer"), data_error);
}

TEST_CASE("discretize: conservation |cells| + dropped == |points|") {
    Trajectory t{"u", {}};
    for (int i = 0; i < 200; ++i)
        t.points.push_back(at_miles(kGrid, -0.5 + 0.013 * i, 0.011 * i, i));
    const auto r = discretize(t, kGrid);
    CHECK(r.seq.cells.size() + r.dropped == t.points.size());
    CHECK(r.dropped > 0);
}

TEST_CASE("discretize: idempotent on cell centers, including ragged edge cells") {
    const Grid ragged{47.0, -122.0, 1.0, 1.0, 0.3}; // 4x4 cells, padded extent
    Trajectory t{"u", {}};
    std::vector<CellId> expected;
    std::int64_t ts = 0;
    for (int r = 0; r < ragged.rows(); ++r)
        for (int c = 0; c < ragged.cols(); ++c) {
            GeoPoint p = cell_center(ragged, CellId{r, c});
            p.timestamp = ts++;
            t.points.push_back(p);
            expected.push_back({r, c});
        }
    const auto res = discretize(t, ragged);
    CHECK(res.dropped == 0);
    REQUIRE(res.seq.cells.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i)
        CHECK(res.seq.cells[i].second == expected[i]);
}

TEST_CASE("parse->discretize pipeline is deterministic") {
    std::string csv = "user_id,timestamp,lat,lon\n";
    for (int i = 0; i < 50; ++i)
        csv += "u," + std::to_string(i) + ",47.00" + std::to_string(i % 10) + ",-121.99\n";
    const auto a = discretize(parse_trajectories(csv).trajectories.at("u"), kGrid);
    const auto b = discretize(parse_trajectories(csv).trajectories.at("u"), kGrid);
    CHECK(a.seq.cells == b.seq.cells);
    CHECK(a.dropped == b.dropped);
}

TEST_CASE("daily: singleton observation") {
    CellSequence s{"u", {{100, CellId{1, 2}}}};
    const auto d = daily_last_locations(s);
    REQUIRE(d.days.size() == 1);
    CHECK(d.days[0] == std::pair<std::int64_t, CellId>{0, CellId{1, 2}});
}

TEST_CASE("daily: last observation of the day wins") {
    CellSequence s{"u", {{100, CellId{0, 0}}, {200, CellId{3, 3}}}};
    const auto d = daily_last_locations(s);
    REQUIRE(d.days.size() == 1);
    CHECK(d.days[0].second == CellId{3, 3});
}

TEST_CASE("daily: tie on max timestamp keeps the later input entry") {
    CellSequence s{"u", {{100, CellId{0, 0}}, {100, CellId{2, 2}}}};
    const auto d = daily_last_locations(s);
    CHECK(d.days[0].second == CellId{2, 2});
}

TEST_CASE("daily: day gaps are preserved, one entry per observed day") {
    CellSequence s{"u",
                   {{0, CellId{0, 0}},
                    {2 * 86400 + 5, CellId{1, 1}},
                    {2 * 86400 + 9, CellId{2, 2}}}};
    const auto d = daily_last_locations(s);
    REQUIRE(d.days.size() == 2);
    CHECK(d.days[0].first == 0);
    CHECK(d.days[1].first == 2);
    CHECK(d.days[1].second == CellId{2, 2});
}

TEST_CASE("daily: output length equals number of distinct observed days") {
    CellSequence s{"u", {}};
    std::int64_t ts = 0;
    std::set<std::int64_t> days;
    for (int i = 0; i < 300; ++i) {
        ts += 20000 + (i * 7919) % 50000;
        s.cells.emplace_back(ts, CellId{i % 3, i % 4});
        days.insert(ts / 86400);
    }
    CHECK(daily_last_locations(s).days.size() == days.size());
}

TEST_CASE("daily: empty sequence is an error") {
    CHECK_THROWS_AS(daily_last_locations(CellSequence{"u", {}}), data_error);
}
