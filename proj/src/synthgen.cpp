#include "mobifair/synthgen.hpp"
#include "mobifair/errors.hpp"
#include "mobifair/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

namespace mobifair {

void PopulationSpec::validate() const {
    grid.validate();
    if (days < 1) throw config_error("popspec: days must be >= 1");
    if (groups.empty()) throw config_error("popspec: at least one group required");
    const int g_rows = grid.rows(), g_cols = grid.cols();
    for (const auto& g : groups) {
        const std::string where = "popspec: group '" + g.label + "': ";
        if (g.label.empty()) throw config_error("popspec: group label must be non-empty");
        if (g.count < 1) throw config_error(where + "count must be >= 1");
        if (!(g.self_transition_prob >= 0.0 && g.self_transition_prob <= 1.0))
            throw config_error(where + "p must be in [0, 1]");
        if (g.active_cells < 1) throw config_error(where + "a must be >= 1");
        if (g.home.rows < 1 || g.home.cols < 1 || g.home.row0 < 0 || g.home.col0 < 0 ||
            g.home.row0 + g.home.rows > g_rows || g.home.col0 + g.home.cols > g_cols)
            throw config_error(where + "home region outside grid");
        if (g.active_cells > g.home.cell_count())
            throw config_error(where + "a exceeds available cells in region");
    }
}

Population generate_population(const PopulationSpec& spec) {
    spec.validate();
    Population pop;

    for (const auto& g : spec.groups) {
        for (int u = 0; u < g.count; ++u) {
            char name[64];
            std::snprintf(name, sizeof name, "%s_%03d", g.label.c_str(), u);
            const std::string user_id = name;
            rng::Engine eng(rng::derive(spec.seed, "synthgen.user", 0, user_id));

            // active cells: a distinct cells from the home region
            const auto picks = eng.sample_without_replacement(
                static_cast<std::size_t>(g.home.cell_count()),
                static_cast<std::size_t>(g.active_cells));
            std::vector<CellId> active;
            active.reserve(picks.size());
            for (std::size_t flat : picks)
                active.push_back({g.home.row0 + static_cast<int>(flat) / g.home.cols,
                                  g.home.col0 + static_cast<int>(flat) % g.home.cols});

            DailyLocationSequence daily;
            daily.user_id = user_id;
            daily.days.reserve(spec.days);
            std::size_t cur = eng.below(active.size());
            for (int day = 0; day < spec.days; ++day) {
                daily.days.emplace_back(day, active[cur]);
                if (active.size() > 1 && eng.unit() >= g.self_transition_prob) {
                    std::size_t next = eng.below(active.size() - 1);
                    cur = next >= cur ? next + 1 : next;
                }
            }

            ClientInfo info;
            info.group = g.label;
            info.record_count = spec.days;
            pop.registry[user_id] = info;
            pop.daily[user_id] = std::move(daily);
        }
    }
    return pop;
}

PopulationSpec popspec_from_text(std::string_view text) {
    PopulationSpec spec;
    GroupSpec* cur = nullptr;

    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        const std::size_t hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        std::istringstream ls{std::string(line)};
        std::string key;
        if (!(ls >> key)) continue;

        auto need_group = [&]() -> GroupSpec& {
            if (!cur)
                throw config_error("popspec line " + std::to_string(line_no) + ": '" + key +
                                   "' before any group.label");
            return *cur;
        };
        auto value_error = [&]() {
            return config_error("popspec line " + std::to_string(line_no) + ": bad value for '" +
                                key + "'");
        };
        auto read_double = [&]() {
            double v;
            if (!(ls >> v)) throw value_error();
            return v;
        };
        auto read_int = [&]() {
            int v;
            if (!(ls >> v)) throw value_error();
            return v;
        };

        if (key == "seed") {
            std::uint64_t v;
            if (!(ls >> v)) throw value_error();
            spec.seed = v;
        } else if (key == "days") {
            spec.days = read_int();
        } else if (key == "grid.origin_lat") {
            spec.grid.origin_lat = read_double();
        } else if (key == "grid.origin_lon") {
            spec.grid.origin_lon = read_double();
        } else if (key == "grid.w") {
            spec.grid.width_miles = read_double();
        } else if (key == "grid.l") {
            spec.grid.length_miles = read_double();
        } else if (key == "grid.cell_size") {
            spec.grid.cell_size_miles = read_double();
        } else if (key == "group.label") {
            GroupSpec g;
            if (!(ls >> g.label)) throw value_error();
            spec.groups.push_back(g);
            cur = &spec.groups.back();
        } else if (key == "group.count") {
            need_group().count = read_int();
        } else if (key == "group.home") {
            auto& home = need_group().home;
            home.row0 = read_int();
            home.col0 = read_int();
            home.rows = read_int();
            home.cols = read_int();
        } else if (key == "group.p") {
            need_group().self_transition_prob = read_double();
        } else if (key == "group.a") {
            need_group().active_cells = read_int();
        } else {
            throw config_error("popspec line " + std::to_string(line_no) + ": unknown key '" +
                               key + "'");
        }
        std::string rest;
        if (ls >> rest)
            throw config_error("popspec line " + std::to_string(line_no) +
                               ": trailing content after '" + key + "'");
    }

    spec.validate();
    return spec;
}

std::string population_to_trajectory_csv(const Population& pop, const Grid& grid) {
    std::ostringstream os;
    os << "user_id,timestamp,lat,lon\n";
    char buf[64];
    for (const auto& [user_id, daily] : pop.daily) {
        for (const auto& [day, cell] : daily.days) {
            const GeoPoint p = cell_center(grid, cell);
            std::snprintf(buf, sizeof buf, "%.17g,%.17g", p.lat, p.lon);
            os << user_id << ',' << day * 86400 << ',' << buf << '\n';
        }
    }
    return os.str();
}

} // namespace mobifair
