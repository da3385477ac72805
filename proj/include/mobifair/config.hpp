#pragma once

#include "mobifair/geo.hpp"
#include "mobifair/heatmap.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mobifair {

struct SimConfig {
    int rounds = 10;
    int clients_per_round = 5;
    int window = 2;
    double test_fraction = 0.2;
    double lr = 0.5;
    int epochs = 1;
    std::string selection_strategy = "uniform";  // uniform|group_stratified|cluster_stratified
    std::string aggregation_strategy = "fedavg"; // fedavg|uniform|group_balanced|predictability_weighted
    std::uint64_t master_seed = 0;

    Grid grid;
    SsimParams ssim;
    std::vector<double> ssim_cell_sizes; // granularities for the ssim command

    int clustering_k = 2;

    double fairness_epsilon = 0.2;          // the 80% rule
    double fairness_accept_threshold = 0.5; // no principled default exists; documented arbitrary
    int fairness_z_buckets = 2;
    double fairness_pi_bin_width = 0.1;

    std::string input_popspec;
    std::string input_trajectories;
    std::string input_registry;

    std::string echo; // raw config text for the manifest
};

// Plain-text `key value` lines, '#' comments. Unknown keys and out-of-range
// values raise config_error naming the key path.
SimConfig config_from_text(std::string_view text);

} // namespace mobifair
