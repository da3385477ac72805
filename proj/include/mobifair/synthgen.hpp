#pragma once

#include "mobifair/geo.hpp"
#include "mobifair/selection.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace mobifair {

// Rectangle of grid cells: rows [row0, row0+rows) x cols [col0, col0+cols).
struct CellRect {
    int row0 = 0;
    int col0 = 0;
    int rows = 0;
    int cols = 0;

    std::int64_t cell_count() const { return static_cast<std::int64_t>(rows) * cols; }
};

struct GroupSpec {
    std::string label;
    int count = 0;                     // users in the group
    CellRect home;                     // region the active cells are drawn from
    double self_transition_prob = 0.5; // p: stay at the current cell
    int active_cells = 1;              // a: size of the per-user cell set
};

struct PopulationSpec {
    std::vector<GroupSpec> groups;
    int days = 0; // T
    Grid grid;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Population {
    std::map<std::string, DailyLocationSequence> daily;
    ClientRegistry registry; // group + record_count filled; pi_max/cluster left unset
};

// Per user: first-order Markov chain over that user's active cells — stay
// with probability p, otherwise jump uniformly to another active cell.
// Bit-reproducible from (spec, spec.seed).
Population generate_population(const PopulationSpec& spec);

// Plain-text key-value spec; group.label opens a new group block.
PopulationSpec popspec_from_text(std::string_view text);

// Daily sequences materialized as one point per day at cell centers, in the
// trajectory CSV schema.
std::string population_to_trajectory_csv(const Population& pop, const Grid& grid);

} // namespace mobifair
