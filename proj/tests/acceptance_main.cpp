// Acceptance suite: one labelled pass/fail line per criterion, nonzero exit
// if any criterion fails. Each criterion also enforces its runtime budget.

#include "mobifair/cli.hpp"
#include "mobifair/cluster.hpp"
#include "mobifair/fairness.hpp"
#include "mobifair/flsim.hpp"
#include "mobifair/heatmap.hpp"
#include "mobifair/manifest.hpp"
#include "mobifair/profile.hpp"
#include "mobifair/rng.hpp"
#include "mobifair/synthgen.hpp"

#include "helpers.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace mobifair;
using mobifair::rng::Engine;

namespace {

namespace fs = std::filesystem;

struct Criterion {
    int number;
    std::string label;
    double budget_seconds;
    std::function<void()> run; // throws std::runtime_error on failure
};

void expect(bool ok, const std::string& what) {
    if (!ok) throw std::runtime_error(what);
}

double fano_rhs(double pi, int l) {
    double h = 0.0;
    if (pi > 0.0 && pi < 1.0) h = -pi * std::log2(pi) - (1.0 - pi) * std::log2(1.0 - pi);
    return h + (1.0 - pi) * std::log2(static_cast<double>(l - 1));
}

Heatmap random_heatmap(int rows, int cols, std::uint64_t seed) {
    Engine eng(seed);
    Heatmap h;
    h.rows = rows;
    h.cols = cols;
    h.v.resize(static_cast<std::size_t>(rows) * cols);
    for (double& x : h.v) x = eng.unit();
    return h;
}

// Analysis-granularity heatmaps for a generated population: positions are
// materialized at generation-grid cell centers and re-binned onto a grid with
// the requested cell size. seconds_per_step scales the chain to sub-daily
// sampling (3600 treats each step as one hour of a T-day collection).
std::map<std::string, Heatmap> heatmaps_at_cell_size(const Population& pop,
                                                     const Grid& generation_grid,
                                                     double cell_size,
                                                     std::int64_t seconds_per_step = 86400) {
    Grid analysis = generation_grid;
    analysis.cell_size_miles = cell_size;
    std::map<std::string, Heatmap> out;
    for (const auto& [id, daily] : pop.daily) {
        Trajectory traj;
        traj.user_id = id;
        for (const auto& [step, cell] : daily.days) {
            GeoPoint p = cell_center(generation_grid, cell);
            p.timestamp = step * seconds_per_step;
            traj.points.push_back(p);
        }
        out[id] = normalize_fm(build_fm(discretize(traj, analysis).seq, analysis));
    }
    return out;
}

// ---------------------------------------------------------------------------

void criterion_fano() {
    for (int l : {2, 4, 16, 100}) {
        expect(std::abs(fano_max_predictability(0.0, l) - 1.0) <= 1e-6,
               "fano(0, L) != 1 for L=" + std::to_string(l));
        const double pi = fano_max_predictability(std::log2(double(l)), l);
        expect(std::abs(pi - 1.0 / l) <= 1e-6,
               "fano(log2 L, L) != 1/L for L=" + std::to_string(l));
    }
    Engine eng(314159);
    for (int trial = 0; trial < 100; ++trial) {
        const int l = 2 + static_cast<int>(eng.below(99));
        const double e = eng.unit() * std::log2(double(l));
        const double pi = fano_max_predictability(e, l);
        const double residual = std::abs(fano_rhs(pi, l) - e);
        expect(residual <= 1e-6, "round-trip residual " + std::to_string(residual));
    }
}

void criterion_ssim() {
    const SsimParams p;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto h = random_heatmap(10 + seed % 5, 9 + seed % 7, seed);
        expect(ssim(h, h, p) == 1.0, "ssim(x,x) != 1.0 exactly at seed " + std::to_string(seed));
    }

    Heatmap zeros, ones;
    zeros.rows = zeros.cols = ones.rows = ones.cols = 12;
    zeros.v.assign(144, 0.0);
    ones.v.assign(144, 1.0);
    const double expected = p.c1() / (1.0 + p.c1());
    expect(std::abs(ssim(zeros, ones, p) - expected) <= 1e-12,
           "constant-image ssim misses c1/(1+c1)");

    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto x = random_heatmap(11, 13, 1000 + seed);
        const auto y = random_heatmap(11, 13, 2000 + seed);
        expect(std::abs(ssim(x, y, p) - ssim(y, x, p)) <= 1e-12, "ssim asymmetric");
    }
}

void criterion_granularity() {
    // 500 m / 250 m / 100 m in miles, coarse to fine
    const std::vector<double> cell_sizes{0.3107, 0.1553, 0.0621};

    for (std::uint64_t master = 1; master <= 5; ++master) {
        // hourly positions over a 365-day collection; heavy revisiting makes
        // coarse maps saturate while fine maps stay sparse and personal, the
        // regime where granularity drives similarity
        PopulationSpec spec;
        spec.grid = {47.0, -122.0, 2.5, 2.5, 0.05}; // 50x50 generation cells
        spec.days = 365 * 24;
        spec.seed = master;
        spec.groups = {{"west", 20, {0, 0, 50, 44}, 0.2, 500},
                       {"east", 20, {0, 6, 50, 44}, 0.2, 500}};
        const auto pop = generate_population(spec);

        double prev = 2.0;
        for (double c : cell_sizes) {
            const auto heatmaps = heatmaps_at_cell_size(pop, spec.grid, c, 3600);
            const double mean = ssim_matrix(heatmaps, SsimParams{}).mean_off_diagonal();
            expect(mean < prev, "mean off-diagonal SSIM not strictly decreasing at cell size " +
                                    std::to_string(c) + " (seed " + std::to_string(master) + ")");
            prev = mean;
        }
    }
}

void criterion_cluster_recovery() {
    int recovered = 0;
    for (std::uint64_t master = 1; master <= 10; ++master) {
        // three adjacent horizontal bands with dense per-user footprints
        PopulationSpec spec;
        spec.grid = {47.0, -122.0, 4.0, 3.75, 0.25}; // 15x16 cells
        spec.days = 300;
        spec.seed = master;
        spec.groups = {{"a", 10, {0, 0, 5, 16}, 0.25, 25},
                       {"b", 10, {5, 0, 5, 16}, 0.25, 25},
                       {"c", 10, {10, 0, 5, 16}, 0.25, 25}};
        const auto pop = generate_population(spec);

        const auto heatmaps = heatmaps_at_cell_size(pop, spec.grid, 0.25);
        const auto sm = ssim_matrix(heatmaps, SsimParams{});
        const auto assignment =
            kmedoids(to_distance(sm), 3, rng::derive(master, "acceptance.cluster"));

        std::vector<int> planted;
        for (const auto& id : assignment.user_ids)
            planted.push_back(pop.registry.at(id).group[0] - 'a');
        if (testutil::adjusted_rand_index(planted, assignment.cluster_of) == 1.0) ++recovered;
    }
    expect(recovered >= 9,
           "planted clusters recovered on only " + std::to_string(recovered) + "/10 seeds");
}

void criterion_entropy() {
    for (int a : {2, 4, 8}) {
        const double target = std::log2(double(a));
        double battery_min = 1e300;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            PopulationSpec spec;
            spec.grid = {47.0, -122.0, 2.0, 2.0, 0.25}; // 8x8
            spec.days = 5000;
            spec.seed = rng::derive(seed, "entropy", a);
            spec.groups = {{"g", 1, {0, 0, 8, 8}, 1.0 / a, a}};
            const auto pop = generate_population(spec);

            std::map<CellId, int> dense;
            std::vector<int> symbols;
            for (const auto& [day, cell] : pop.daily.begin()->second.days) {
                auto [it, ok] = dense.try_emplace(cell, int(dense.size()));
                symbols.push_back(it->second);
            }
            const double e = lz_entropy(symbols).value_bits;
            expect(std::abs(e - target) / target <= 0.15,
                   "lz entropy off by >15% for a=" + std::to_string(a) + " seed " +
                       std::to_string(seed) + " (got " + std::to_string(e) + ")");
            battery_min = std::min(battery_min, e);
        }
        const double e_const = lz_entropy(std::vector<int>(5000, 0)).value_bits;
        expect(e_const <= battery_min,
               "constant sequence does not score the battery minimum for a=" +
                   std::to_string(a));
    }
}

void criterion_eighty_percent_rule() {
    std::vector<OutcomeRecord> outcomes;
    for (int i = 0; i < 5; ++i) {
        outcomes.push_back({"a" + std::to_string(i), 1.0, i < 4, "a", "z0"});
        outcomes.push_back({"b" + std::to_string(i), 1.0, true, "b", "z0"});
    }
    const auto strict = group_fairness(outcomes, 0.19999);
    expect(strict.cells.size() == 1 && strict.cells[0].ratio.has_value(), "ratio missing");
    expect(std::abs(*strict.cells[0].ratio - 0.8) <= 1e-12, "ratio != 0.8");
    expect(strict.satisfied.has_value() && !*strict.satisfied,
           "epsilon 0.19999 must not satisfy the 80% rule");
    const auto at_limit = group_fairness(outcomes, 0.2);
    expect(at_limit.satisfied.has_value() && *at_limit.satisfied,
           "epsilon 0.2 must satisfy the 80% rule");
}

void criterion_optimizer() {
    // gradient vs central finite differences on seeded small instances
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const ModelSpec spec{3, 1};
        Engine eng(seed);
        std::vector<double> params(spec.param_count());
        for (double& x : params) x = eng.unit() - 0.5;
        std::vector<Example> examples(10);
        for (auto& ex : examples) {
            ex.context = {static_cast<int>(eng.below(3))};
            ex.label = static_cast<int>(eng.below(3));
        }

        std::vector<double> grad;
        mean_loss(spec, params, examples, &grad);
        const double h = 1e-5;
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double saved = params[i];
            params[i] = saved + h;
            const double up = mean_loss(spec, params, examples);
            params[i] = saved - h;
            const double down = mean_loss(spec, params, examples);
            params[i] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double rel =
                std::abs(grad[i] - fd) / std::max({std::abs(grad[i]), std::abs(fd), 1e-8});
            expect(rel <= 1e-5, "gradient check failed: rel err " + std::to_string(rel));
        }
    }

    // single-client convex training: loss strictly decreases per epoch
    const ModelSpec spec{4, 2};
    ClientDataset ds;
    ds.user_id = "solo";
    ds.examples = {{{1, 2}, 3}, {{2, 3}, 1}};
    ds.train_count = 2;
    ds.eligible = true;
    GlobalModel model = GlobalModel::zeros(spec);
    double prev = mean_loss(spec, model.params, ds.train());
    for (int epoch = 0; epoch < 40; ++epoch) {
        const auto up = local_train(model, ds, 1, 0.8, 0);
        expect(up.train_loss < prev, "training loss did not decrease at epoch " +
                                         std::to_string(epoch));
        prev = up.train_loss;
        model.params = up.new_params;
    }
}

void criterion_aggregation_oracle() {
    Engine eng(777);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + eng.below(8);
        const std::size_t dim = 1 + eng.below(6);
        std::vector<ClientUpdate> ups;
        for (std::size_t i = 0; i < n; ++i) {
            ClientUpdate up;
            up.user_id = "u" + std::to_string(i);
            up.num_samples = 1 + static_cast<std::int64_t>(eng.below(50));
            up.new_params.resize(dim);
            for (double& x : up.new_params) x = eng.unit() * 6.0 - 3.0;
            ups.push_back(std::move(up));
        }
        const auto got = aggregate(ups, Aggregation::fedavg, {}, {});

        // independent weighted-mean oracle
        std::vector<double> want(dim, 0.0);
        double total = 0.0;
        for (const auto& up : ups) total += double(up.num_samples);
        for (const auto& up : ups)
            for (std::size_t j = 0; j < dim; ++j)
                want[j] += double(up.num_samples) / total * up.new_params[j];
        for (std::size_t j = 0; j < dim; ++j)
            expect(std::abs(got[j] - want[j]) <= 1e-12, "fedavg misses the oracle");
    }

    // group_balanced two-level mean, closed form
    std::vector<ClientUpdate> ups;
    std::map<std::string, std::string> groups;
    const std::vector<double> values{1.0, 2.0, 6.0, 8.0};
    for (std::size_t i = 0; i < 4; ++i) {
        ClientUpdate up;
        up.user_id = "u" + std::to_string(i);
        up.num_samples = 1 + static_cast<std::int64_t>(i);
        up.new_params = {values[i]};
        groups[up.user_id] = i < 3 ? "a" : "b";
        ups.push_back(std::move(up));
    }
    const auto got = aggregate(ups, Aggregation::group_balanced, groups, {});
    const double want = ((1.0 + 2.0 + 6.0) / 3.0 + 8.0) / 2.0;
    expect(std::abs(got[0] - want) <= 1e-12, "group_balanced misses the two-level mean");
}

double intergroup_gap(const SimulationResult& result, const ClientRegistry& registry) {
    double sum_min = 0.0, sum_maj = 0.0;
    int n_min = 0, n_maj = 0;
    for (const auto& [id, acc] : result.rounds.back().test_accuracy) {
        if (registry.at(id).group == "minority") {
            sum_min += acc;
            ++n_min;
        } else {
            sum_maj += acc;
            ++n_maj;
        }
    }
    return std::abs(sum_maj / n_maj - sum_min / n_min);
}

void criterion_fairness_direction() {
    // biased population: the minority is 20% of users confined to a smaller
    // region with fewer active cells and shorter histories. The majority all
    // share one compact footprint, so it converges fast and is insensitive to
    // selection; the minority's accuracy depends on how often it trains.
    double gap_uniform = 0.0, gap_stratified = 0.0, gap_balanced = 0.0;
    const int n_seeds = 10;

    for (std::uint64_t master = 1; master <= n_seeds; ++master) {
        PopulationSpec spec;
        spec.grid = {47.0, -122.0, 3.0, 3.0, 0.375}; // 8x8, V = 64
        spec.days = 120;
        spec.seed = rng::derive(master, "acceptance.bias");
        spec.groups = {{"majority", 24, {2, 0, 2, 4}, 0.6, 8},
                       {"minority", 6, {5, 1, 2, 3}, 0.6, 3}};
        auto pop = generate_population(spec);
        for (auto& [id, daily] : pop.daily)
            if (pop.registry.at(id).group == "minority" && daily.days.size() > 60)
                daily.days.resize(60); // fewer records contributed

        std::map<std::string, ClientDataset> datasets;
        ClientRegistry registry = pop.registry;
        for (const auto& [id, daily] : pop.daily) {
            auto ds = build_client_dataset(daily, spec.grid, 2, 0.2);
            expect(ds.eligible, "acceptance population produced an ineligible client");
            datasets[id] = std::move(ds);
            registry.at(id).pi_max = build_profile(daily).pi_max;
            registry.at(id).record_count = static_cast<std::int64_t>(daily.days.size());
        }

        SimConfig cfg;
        cfg.rounds = 30;
        cfg.clients_per_round = 7;
        cfg.window = 2;
        cfg.test_fraction = 0.2;
        cfg.lr = 0.5;
        cfg.epochs = 2;
        cfg.master_seed = master;
        const ModelSpec spec_model{64, 2};

        cfg.selection_strategy = "uniform";
        cfg.aggregation_strategy = "fedavg";
        gap_uniform += intergroup_gap(run_simulation(cfg, spec_model, datasets, registry),
                                      registry);

        cfg.selection_strategy = "group_stratified";
        gap_stratified += intergroup_gap(run_simulation(cfg, spec_model, datasets, registry),
                                         registry);

        cfg.aggregation_strategy = "group_balanced";
        gap_balanced += intergroup_gap(run_simulation(cfg, spec_model, datasets, registry),
                                       registry);
    }

    gap_uniform /= n_seeds;
    gap_stratified /= n_seeds;
    gap_balanced /= n_seeds;

    std::ostringstream os;
    os << "mean gaps: uniform " << gap_uniform << ", stratified " << gap_stratified
       << ", stratified+balanced " << gap_balanced;
    std::printf("         %s\n", os.str().c_str());

    expect(gap_stratified <= gap_uniform,
           "group-stratified selection did not shrink the inter-group gap (" + os.str() + ")");
    expect(gap_balanced <= gap_stratified,
           "group_balanced aggregation increased the inter-group gap (" + os.str() + ")");
}

void criterion_determinism() {
    const fs::path dir = fs::temp_directory_path() / "mobifair_acceptance_det";
    fs::remove_all(dir);
    fs::create_directories(dir);

    const char* popspec =
        "seed 4242\n"
        "days 100\n"
        "grid.origin_lat 47.0\n"
        "grid.origin_lon -122.0\n"
        "grid.w 3.0\n"
        "grid.l 3.0\n"
        "grid.cell_size 0.375\n"
        "group.label north\n"
        "group.count 10\n"
        "group.home 0 0 4 8\n"
        "group.p 0.6\n"
        "group.a 4\n"
        "group.label south\n"
        "group.count 10\n"
        "group.home 4 0 4 8\n"
        "group.p 0.6\n"
        "group.a 4\n";
    write_file(dir / "pop.txt", popspec);
    const std::string cfg = "rounds 5\nclients_per_round 4\nwindow 2\ntest_fraction 0.2\n"
                            "lr 0.5\nepochs 2\nselection_strategy group_stratified\n"
                            "aggregation_strategy fedavg\nmaster_seed 99\nclustering.k 2\n"
                            "input.popspec " +
                            (dir / "pop.txt").string() + "\n";
    write_file(dir / "cfg.txt", cfg);

    for (const char* run : {"r1", "r2"}) {
        const int rc = cli_main({"--config", (dir / "cfg.txt").string(), "--out",
                                 (dir / run).string(), "simulate"});
        expect(rc == 0, "cmd_simulate exited with code " + std::to_string(rc));
    }
    expect(read_file(dir / "r1" / "rounds.jsonl") == read_file(dir / "r2" / "rounds.jsonl"),
           "rounds.jsonl differs between identical runs");
    expect(read_file(dir / "r1" / "model.bin") == read_file(dir / "r2" / "model.bin"),
           "model.bin differs between identical runs");
}

} // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "Fano identities and round-trip residuals", 1.0, criterion_fano},
        {2, "SSIM self-similarity, constant closed form, symmetry", 5.0, criterion_ssim},
        {3, "granularity: mean SSIM strictly decreases coarse to fine", 120.0,
         criterion_granularity},
        {4, "planted 3-region cluster recovery (ARI = 1.0 on >= 9/10 seeds)", 60.0,
         criterion_cluster_recovery},
        {5, "entropy estimator within 15% of log2(a); constant at the minimum", 30.0,
         criterion_entropy},
        {6, "80%-rule: ratio 0.8 flips satisfied exactly at epsilon 0.2", 1.0,
         criterion_eighty_percent_rule},
        {7, "optimizer: finite-difference gradients, monotone convex descent", 10.0,
         criterion_optimizer},
        {8, "aggregation: fedavg vs weighted-mean oracle, group_balanced closed form", 5.0,
         criterion_aggregation_oracle},
        {9, "fairness direction: stratified selection shrinks the inter-group gap", 600.0,
         criterion_fairness_direction},
        {10, "determinism: byte-identical rounds.jsonl and model.bin", 120.0,
         criterion_determinism},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string error;
        try {
            c.run();
        } catch (const std::exception& e) {
            error = e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (error.empty() && elapsed > c.budget_seconds)
            error = "runtime " + std::to_string(elapsed) + " s exceeds budget of " +
                    std::to_string(c.budget_seconds) + " s";
        if (error.empty()) {
            std::printf("[PASS] criterion %2d: %s (%.2f s)\n", c.number, c.label.c_str(),
                        elapsed);
        } else {
            std::printf("[FAIL] criterion %2d: %s (%.2f s)\n         %s\n", c.number,
                        c.label.c_str(), elapsed, error.c_str());
            ++failures;
        }
        std::fflush(stdout);
    }

    if (failures > 0) std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
