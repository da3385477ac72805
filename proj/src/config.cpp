#include "mobifair/config.hpp"
#include "mobifair/errors.hpp"

#include <set>
#include <sstream>

namespace mobifair {

namespace {

void check(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw config_error("config: key '" + key + "' " + what);
}

} // namespace

SimConfig config_from_text(std::string_view text) {
    SimConfig cfg;
    cfg.echo = text;

    static const std::set<std::string> selection_names = {"uniform", "group_stratified",
                                                          "cluster_stratified"};
    static const std::set<std::string> aggregation_names = {
        "fedavg", "uniform", "group_balanced", "predictability_weighted"};

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

        auto value_error = [&]() {
            return config_error("config line " + std::to_string(line_no) + ": bad value for '" +
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
        auto read_string = [&]() {
            std::string v;
            if (!(ls >> v)) throw value_error();
            return v;
        };

        if (key == "rounds") {
            cfg.rounds = read_int();
            check(cfg.rounds >= 0, key, "must be >= 0");
        } else if (key == "clients_per_round") {
            cfg.clients_per_round = read_int();
            check(cfg.clients_per_round >= 1, key, "must be >= 1");
        } else if (key == "window") {
            cfg.window = read_int();
            check(cfg.window >= 1, key, "must be >= 1");
        } else if (key == "test_fraction") {
            cfg.test_fraction = read_double();
            check(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0, key, "must be in (0, 1)");
        } else if (key == "lr") {
            cfg.lr = read_double();
            check(cfg.lr > 0.0, key, "must be > 0");
        } else if (key == "epochs") {
            cfg.epochs = read_int();
            check(cfg.epochs >= 1, key, "must be >= 1");
        } else if (key == "selection_strategy") {
            cfg.selection_strategy = read_string();
            check(selection_names.count(cfg.selection_strategy) > 0, key,
                  "must be one of uniform|group_stratified|cluster_stratified");
        } else if (key == "aggregation_strategy") {
            cfg.aggregation_strategy = read_string();
            check(aggregation_names.count(cfg.aggregation_strategy) > 0, key,
                  "must be one of fedavg|uniform|group_balanced|predictability_weighted");
        } else if (key == "master_seed") {
            if (!(ls >> cfg.master_seed)) throw value_error();
        } else if (key == "grid.origin_lat") {
            cfg.grid.origin_lat = read_double();
        } else if (key == "grid.origin_lon") {
            cfg.grid.origin_lon = read_double();
        } else if (key == "grid.w") {
            cfg.grid.width_miles = read_double();
        } else if (key == "grid.l") {
            cfg.grid.length_miles = read_double();
        } else if (key == "grid.cell_size") {
            cfg.grid.cell_size_miles = read_double();
        } else if (key == "ssim.k1") {
            cfg.ssim.k1 = read_double();
            check(cfg.ssim.k1 > 0.0, key, "must be > 0");
        } else if (key == "ssim.k2") {
            cfg.ssim.k2 = read_double();
            check(cfg.ssim.k2 > 0.0, key, "must be > 0");
        } else if (key == "ssim.window") {
            cfg.ssim.window = read_int();
            check(cfg.ssim.window >= 1, key, "must be >= 1");
        } else if (key == "ssim.cell_sizes") {
            cfg.ssim_cell_sizes.clear();
            double v;
            while (ls >> v) {
                check(v > 0.0, key, "entries must be > 0");
                cfg.ssim_cell_sizes.push_back(v);
            }
            check(!cfg.ssim_cell_sizes.empty(), key, "needs at least one cell size");
        } else if (key == "clustering.k") {
            cfg.clustering_k = read_int();
            check(cfg.clustering_k >= 1, key, "must be >= 1");
        } else if (key == "fairness.epsilon") {
            cfg.fairness_epsilon = read_double();
            check(cfg.fairness_epsilon >= 0.0 && cfg.fairness_epsilon <= 1.0, key,
                  "must be in [0, 1]");
        } else if (key == "fairness.accept_threshold") {
            cfg.fairness_accept_threshold = read_double();
            check(cfg.fairness_accept_threshold >= 0.0 && cfg.fairness_accept_threshold <= 1.0,
                  key, "must be in [0, 1]");
        } else if (key == "fairness.z_buckets") {
            cfg.fairness_z_buckets = read_int();
            check(cfg.fairness_z_buckets >= 1, key, "must be >= 1");
        } else if (key == "fairness.pi_bin_width") {
            cfg.fairness_pi_bin_width = read_double();
            check(cfg.fairness_pi_bin_width > 0.0 && cfg.fairness_pi_bin_width <= 1.0, key,
                  "must be in (0, 1]");
        } else if (key == "input.popspec") {
            cfg.input_popspec = read_string();
        } else if (key == "input.trajectories") {
            cfg.input_trajectories = read_string();
        } else if (key == "input.registry") {
            cfg.input_registry = read_string();
        } else {
            throw config_error("config line " + std::to_string(line_no) + ": unknown key '" +
                               key + "'");
        }

        if (key != "ssim.cell_sizes") {
            std::string rest;
            if (ls >> rest)
                throw config_error("config line " + std::to_string(line_no) +
                                   ": trailing content after '" + key + "'");
        }
    }
    return cfg;
}

} // namespace mobifair
