#include "mobifair/cli.hpp"

#include "mobifair/cluster.hpp"
#include "mobifair/config.hpp"
#include "mobifair/errors.hpp"
#include "mobifair/fairness.hpp"
#include "mobifair/flsim.hpp"
#include "mobifair/heatmap.hpp"
#include "mobifair/manifest.hpp"
#include "mobifair/profile.hpp"
#include "mobifair/rng.hpp"
#include "mobifair/synthgen.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace mobifair {

namespace {

namespace fs = std::filesystem;

struct GlobalOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
};

SimConfig load_config(const GlobalOpts& g) {
    if (g.config_path.empty()) throw config_error("--config is required for this command");
    SimConfig cfg = config_from_text(read_file(g.config_path));
    if (g.seed_set) cfg.master_seed = g.seed;
    return cfg;
}

fs::path prepare_out_dir(const GlobalOpts& g) {
    fs::path dir = g.out_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw data_error("cannot create output directory: " + dir.string());
    return dir;
}

std::string format_cell_size(double c) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", c);
    return buf;
}

void report_bad_rows(const ParseResult& parsed) {
    if (parsed.bad_rows == 0) return;
    std::cerr << "warning: " << parsed.bad_rows << " of " << parsed.total_rows
              << " rows unparseable\n";
    for (const auto& d : parsed.diagnostics) std::cerr << "  " << d << "\n";
}

// Trajectories -> per-user daily sequences on the given grid. Users that fail
// (all points out of bounds, too few days) are reported and skipped.
std::map<std::string, DailyLocationSequence> daily_from_trajectories(
    const ParseResult& parsed, const Grid& grid) {
    std::map<std::string, DailyLocationSequence> daily;
    for (const auto& [id, traj] : parsed.trajectories) {
        try {
            const auto disc = discretize(traj, grid);
            daily[id] = daily_last_locations(disc.seq);
        } catch (const data_error& e) {
            std::cerr << "warning: skipping user " << id << ": " << e.what() << "\n";
        }
    }
    return daily;
}

std::map<std::string, Heatmap> heatmaps_from_daily(
    const std::map<std::string, DailyLocationSequence>& daily, const Grid& grid) {
    std::map<std::string, Heatmap> heatmaps;
    for (const auto& [id, seq] : daily) {
        CellSequence cells;
        cells.user_id = id;
        for (const auto& [day, cell] : seq.days) cells.cells.emplace_back(day * 86400, cell);
        heatmaps[id] = normalize_fm(build_fm(cells, grid));
    }
    return heatmaps;
}

AuditParams audit_params_from_config(const SimConfig& cfg) {
    AuditParams p;
    p.epsilon = cfg.fairness_epsilon;
    p.accept_threshold = cfg.fairness_accept_threshold;
    p.z_buckets = cfg.fairness_z_buckets;
    p.pi_bin_width = cfg.fairness_pi_bin_width;
    p.cluster_k = cfg.clustering_k;
    p.window = cfg.window;
    return p;
}

void cmd_generate(const GlobalOpts& g, const std::string& popspec_path) {
    const std::string spec_text = read_file(popspec_path);
    PopulationSpec spec = popspec_from_text(spec_text);
    if (g.seed_set) spec.seed = g.seed;

    const fs::path out = prepare_out_dir(g);
    RunManifest manifest;
    manifest.command = "generate";
    manifest.master_seed = spec.seed;
    manifest.config_echo = spec_text;
    manifest.input_digests[popspec_path] = bytes_digest_hex(spec_text);
    manifest.outputs = {"trajectories.csv", "registry.csv"};
    write_manifest(out, manifest);

    const Population pop = generate_population(spec);
    write_file(out / "trajectories.csv", population_to_trajectory_csv(pop, spec.grid));
    write_file(out / "registry.csv", registry_to_csv(pop.registry));
}

void cmd_profile(const GlobalOpts& g, const std::string& trajectories_path) {
    const SimConfig cfg = load_config(g);
    cfg.grid.validate();
    const std::string csv = read_file(trajectories_path);

    const fs::path out = prepare_out_dir(g);
    RunManifest manifest;
    manifest.command = "profile";
    manifest.master_seed = cfg.master_seed;
    manifest.config_echo = cfg.echo;
    manifest.input_digests[trajectories_path] = bytes_digest_hex(csv);
    manifest.input_digests[g.config_path] = bytes_digest_hex(cfg.echo);
    manifest.outputs = {"profiles.json"};
    write_manifest(out, manifest);

    const ParseResult parsed = parse_trajectories(csv);
    report_bad_rows(parsed);
    std::vector<MobilityProfile> profiles;
    for (const auto& [id, daily] : daily_from_trajectories(parsed, cfg.grid)) {
        try {
            profiles.push_back(build_profile(daily));
        } catch (const data_error& e) {
            std::cerr << "warning: cannot profile user " << id << ": " << e.what() << "\n";
        }
    }
    write_file(out / "profiles.json", profiles_to_json(profiles));
}

void cmd_ssim(const GlobalOpts& g, const std::string& trajectories_path, bool dump_pgm) {
    const SimConfig cfg = load_config(g);
    cfg.grid.validate();
    const std::string csv = read_file(trajectories_path);
    std::vector<double> cell_sizes = cfg.ssim_cell_sizes;
    if (cell_sizes.empty()) cell_sizes = {cfg.grid.cell_size_miles};

    const fs::path out = prepare_out_dir(g);
    RunManifest manifest;
    manifest.command = "ssim";
    manifest.master_seed = cfg.master_seed;
    manifest.config_echo = cfg.echo;
    manifest.input_digests[trajectories_path] = bytes_digest_hex(csv);
    manifest.input_digests[g.config_path] = bytes_digest_hex(cfg.echo);
    for (double c : cell_sizes)
        manifest.outputs.push_back("ssim_" + format_cell_size(c) + ".csv");
    write_manifest(out, manifest);

    const ParseResult parsed = parse_trajectories(csv);
    report_bad_rows(parsed);
    if (parsed.trajectories.size() < 2) throw data_error("ssim: need at least 2 users");

    for (double c : cell_sizes) {
        Grid grid = cfg.grid;
        grid.cell_size_miles = c;
        grid.validate();

        std::map<std::string, Heatmap> heatmaps;
        for (const auto& [id, traj] : parsed.trajectories) {
            try {
                heatmaps[id] = normalize_fm(build_fm(discretize(traj, grid).seq, grid));
            } catch (const data_error& e) {
                std::cerr << "warning: skipping user " << id << ": " << e.what() << "\n";
            }
        }
        if (heatmaps.size() < 2)
            throw data_error("ssim: fewer than 2 users mapped onto the grid at cell size " +
                             format_cell_size(c));

        const auto sm = ssim_matrix(heatmaps, cfg.ssim);
        write_file(out / ("ssim_" + format_cell_size(c) + ".csv"), similarity_to_csv(sm));
        if (dump_pgm)
            for (const auto& [id, h] : heatmaps)
                write_file(out / ("heatmap_" + format_cell_size(c) + "_" + id + ".pgm"),
                           to_pgm(h));
    }
}

void cmd_cluster(const GlobalOpts& g, const std::string& ssim_path, int k_flag) {
    int k = k_flag;
    if (k < 1 && !g.config_path.empty()) k = load_config(g).clustering_k;
    if (k < 1) throw config_error("cluster: --k (or clustering.k in --config) is required");
    const std::uint64_t seed = g.seed_set ? g.seed : 0;

    const std::string csv = read_file(ssim_path);
    const fs::path out = prepare_out_dir(g);
    RunManifest manifest;
    manifest.command = "cluster";
    manifest.master_seed = seed;
    manifest.input_digests[ssim_path] = bytes_digest_hex(csv);
    manifest.outputs = {"clusters.csv"};
    write_manifest(out, manifest);

    const auto sm = similarity_from_csv(csv);
    const auto assignment = kmedoids(to_distance(sm), k, seed);
    write_file(out / "clusters.csv", assignment_to_csv(assignment));
}

struct SimulationInputs {
    Grid grid;
    std::map<std::string, DailyLocationSequence> daily;
    ClientRegistry registry;
    std::optional<PopulationSpec> popspec;
};

SimulationInputs load_simulation_inputs(const SimConfig& cfg, RunManifest& manifest) {
    SimulationInputs in;
    if (!cfg.input_popspec.empty()) {
        const std::string text = read_file(cfg.input_popspec);
        manifest.input_digests[cfg.input_popspec] = bytes_digest_hex(text);
        in.popspec = popspec_from_text(text);
        in.grid = in.popspec->grid;
        Population pop = generate_population(*in.popspec);
        in.daily = std::move(pop.daily);
        in.registry = std::move(pop.registry);
        return in;
    }
    if (cfg.input_trajectories.empty())
        throw config_error("config: one of input.popspec or input.trajectories is required");

    const std::string csv = read_file(cfg.input_trajectories);
    manifest.input_digests[cfg.input_trajectories] = bytes_digest_hex(csv);
    cfg.grid.validate();
    in.grid = cfg.grid;
    const ParseResult parsed = parse_trajectories(csv);
    report_bad_rows(parsed);
    in.daily = daily_from_trajectories(parsed, in.grid);

    if (!cfg.input_registry.empty()) {
        const std::string reg_csv = read_file(cfg.input_registry);
        manifest.input_digests[cfg.input_registry] = bytes_digest_hex(reg_csv);
        in.registry = registry_from_csv(reg_csv);
        for (const auto& [id, seq] : in.daily)
            if (in.registry.find(id) == in.registry.end())
                throw data_error("registry: no entry for user " + id);
    } else {
        for (const auto& [id, traj] : parsed.trajectories) {
            ClientInfo info;
            info.group = "all";
            info.record_count = static_cast<std::int64_t>(traj.points.size());
            in.registry[id] = info;
        }
    }
    return in;
}

void cmd_simulate(const GlobalOpts& g) {
    const SimConfig cfg = load_config(g);
    const fs::path out = prepare_out_dir(g);

    RunManifest manifest;
    manifest.command = "simulate";
    manifest.master_seed = cfg.master_seed;
    manifest.config_echo = cfg.echo;
    manifest.input_digests[g.config_path] = bytes_digest_hex(cfg.echo);
    SimulationInputs in = load_simulation_inputs(cfg, manifest);
    manifest.outputs = {"rounds.jsonl", "model.bin", "report.json"};
    write_manifest(out, manifest);

    // profiles feed predictability weights and the z buckets
    for (auto& [id, info] : in.registry) {
        const auto it = in.daily.find(id);
        if (it == in.daily.end()) {
            info.eligible = false;
            continue;
        }
        try {
            info.pi_max = build_profile(it->second).pi_max;
        } catch (const data_error&) {
            info.eligible = false;
        }
    }

    std::map<std::string, ClientDataset> datasets;
    for (const auto& [id, daily] : in.daily) {
        auto ds = build_client_dataset(daily, in.grid, cfg.window, cfg.test_fraction);
        if (ds.eligible)
            datasets[id] = std::move(ds);
        else if (auto it = in.registry.find(id); it != in.registry.end())
            it->second.eligible = false;
    }

    std::size_t eligible = 0;
    for (const auto& [id, info] : in.registry)
        if (info.eligible && datasets.count(id)) ++eligible;

    // mobility-similarity clusters, for cluster-stratified selection and the
    // per-cluster report section
    std::map<std::string, int> cluster_of;
    if (eligible >= 2 && cfg.clustering_k >= 2 &&
        static_cast<std::size_t>(cfg.clustering_k) <= eligible) {
        std::map<std::string, DailyLocationSequence> eligible_daily;
        for (const auto& [id, seq] : in.daily)
            if (in.registry.at(id).eligible && datasets.count(id)) eligible_daily[id] = seq;
        const auto heatmaps = heatmaps_from_daily(eligible_daily, in.grid);
        SsimParams sp = cfg.ssim;
        sp.window = std::min({sp.window, in.grid.rows(), in.grid.cols()});
        const auto sm = ssim_matrix(heatmaps, sp);
        const auto assignment = kmedoids(to_distance(sm), cfg.clustering_k,
                                         rng::derive(cfg.master_seed, "cluster"));
        for (std::size_t i = 0; i < assignment.user_ids.size(); ++i) {
            cluster_of[assignment.user_ids[i]] = assignment.cluster_of[i];
            in.registry.at(assignment.user_ids[i]).cluster = assignment.cluster_of[i];
        }
    } else if (cfg.selection_strategy == "cluster_stratified") {
        throw data_error("simulate: cluster_stratified selection needs >= 2 eligible clients "
                         "and 2 <= clustering.k <= eligible count");
    }

    const ModelSpec spec{in.grid.rows() * in.grid.cols(), cfg.window};
    const SimulationResult result = run_simulation(cfg, spec, datasets, in.registry);

    std::ostringstream rounds_os;
    for (const auto& rec : result.rounds) rounds_os << round_to_json(rec) << '\n';
    write_file(out / "rounds.jsonl", rounds_os.str());

    const auto model_bytes = serialize_model(result.model);
    write_file(out / "model.bin",
               std::string_view(reinterpret_cast<const char*>(model_bytes.data()),
                                model_bytes.size()));

    // final outcomes: last round's accuracies, or the initial model when R=0
    std::map<std::string, double> final_acc;
    if (!result.rounds.empty()) {
        final_acc = result.rounds.back().test_accuracy;
    } else {
        for (const auto& [id, info] : in.registry)
            if (info.eligible && datasets.count(id))
                final_acc[id] = accuracy(spec, result.model.params, datasets.at(id).test());
    }

    FairnessReport report;
    report.config_echo = {{"config", cfg.echo}, {"master_seed", cfg.master_seed}};
    if (!final_acc.empty()) {
        ClientRegistry outcome_reg;
        std::map<std::string, double> pi_of;
        for (const auto& [id, acc] : final_acc) {
            outcome_reg[id] = in.registry.at(id);
            pi_of[id] = in.registry.at(id).pi_max;
        }
        const auto z_of =
            bucketize_z(outcome_reg, ZScheme::pi_max_quantiles, cfg.fairness_z_buckets);
        const auto outcomes =
            make_outcomes(final_acc, outcome_reg, z_of, cfg.fairness_accept_threshold);
        report.group = group_fairness(outcomes, cfg.fairness_epsilon);
        report.individual_pi =
            individual_fairness_pi(outcomes, pi_of, cfg.fairness_pi_bin_width);
        if (!cluster_of.empty())
            report.individual_ssim = individual_fairness_ssim(outcomes, cluster_of);
    }
    if (in.popspec) {
        const auto audit = audit_with_synthetic(result.model, *in.popspec,
                                                rng::derive(cfg.master_seed, "audit"),
                                                audit_params_from_config(cfg));
        report.audit = fairness_report_to_json(audit);
    } else {
        report.audit = {{"skipped", "no population spec configured"}};
    }
    write_file(out / "report.json", fairness_report_to_json(report).dump(2) + "\n");
}

void cmd_audit(const GlobalOpts& g, const std::string& model_path,
               const std::string& popspec_path) {
    AuditParams params;
    nlohmann::json echo = nlohmann::json(nullptr);
    if (!g.config_path.empty()) {
        const SimConfig cfg = load_config(g);
        params = audit_params_from_config(cfg);
        echo = cfg.echo;
    }
    const std::uint64_t seed = g.seed_set ? g.seed : 0;

    const std::string model_bytes = read_file(model_path);
    const std::string spec_text = read_file(popspec_path);

    const fs::path out = prepare_out_dir(g);
    RunManifest manifest;
    manifest.command = "audit";
    manifest.master_seed = seed;
    manifest.config_echo = echo;
    manifest.input_digests[model_path] = bytes_digest_hex(model_bytes);
    manifest.input_digests[popspec_path] = bytes_digest_hex(spec_text);
    manifest.outputs = {"audit.json"};
    write_manifest(out, manifest);

    const GlobalModel model = deserialize_model(
        {reinterpret_cast<const std::uint8_t*>(model_bytes.data()), model_bytes.size()});
    const PopulationSpec spec = popspec_from_text(spec_text);
    FairnessReport report = audit_with_synthetic(model, spec, seed, params);
    report.config_echo = echo;
    write_file(out / "audit.json", fairness_report_to_json(report).dump(2) + "\n");
}

void cmd_report(const GlobalOpts& g, const std::string& rounds_path,
                const std::string& registry_path, const std::string& clusters_path) {
    SimConfig cfg; // defaults unless --config given
    if (!g.config_path.empty()) cfg = load_config(g);

    const std::string rounds_text = read_file(rounds_path);
    const std::string registry_csv = read_file(registry_path);
    std::string clusters_csv;
    if (!clusters_path.empty()) clusters_csv = read_file(clusters_path);

    const fs::path out = prepare_out_dir(g);
    RunManifest manifest;
    manifest.command = "report";
    manifest.master_seed = cfg.master_seed;
    manifest.config_echo = cfg.echo.empty() ? nlohmann::json(nullptr) : nlohmann::json(cfg.echo);
    manifest.input_digests[rounds_path] = bytes_digest_hex(rounds_text);
    manifest.input_digests[registry_path] = bytes_digest_hex(registry_csv);
    if (!clusters_path.empty())
        manifest.input_digests[clusters_path] = bytes_digest_hex(clusters_csv);
    manifest.outputs = {"report.json"};
    write_manifest(out, manifest);

    const auto rounds = rounds_from_jsonl(rounds_text);
    if (rounds.empty()) throw data_error("report: rounds.jsonl has no rounds");
    const auto& final_acc = rounds.back().test_accuracy;
    if (final_acc.empty()) throw data_error("report: final round has no accuracies");

    const ClientRegistry registry = registry_from_csv(registry_csv);

    ClientRegistry outcome_reg;
    std::map<std::string, double> pi_of;
    for (const auto& [id, acc] : final_acc) {
        const auto it = registry.find(id);
        if (it == registry.end()) throw data_error("report: user " + id + " not in registry");
        outcome_reg[id] = it->second;
        pi_of[id] = it->second.pi_max;
    }

    std::map<std::string, int> cluster_of;
    if (!clusters_path.empty()) {
        const auto assignment = assignment_from_csv(clusters_csv);
        for (std::size_t i = 0; i < assignment.user_ids.size(); ++i)
            cluster_of[assignment.user_ids[i]] = assignment.cluster_of[i];
    } else {
        bool all_clustered = true;
        for (const auto& [id, info] : outcome_reg) all_clustered &= info.cluster >= 0;
        if (all_clustered)
            for (const auto& [id, info] : outcome_reg) cluster_of[id] = info.cluster;
    }

    const auto z_of =
        bucketize_z(outcome_reg, ZScheme::pi_max_quantiles, cfg.fairness_z_buckets);
    const auto outcomes =
        make_outcomes(final_acc, outcome_reg, z_of, cfg.fairness_accept_threshold);

    FairnessReport report;
    report.group = group_fairness(outcomes, cfg.fairness_epsilon);
    report.individual_pi = individual_fairness_pi(outcomes, pi_of, cfg.fairness_pi_bin_width);
    if (!cluster_of.empty())
        report.individual_ssim = individual_fairness_ssim(outcomes, cluster_of);
    report.audit = {{"skipped", "report command does not audit"}};
    if (!cfg.echo.empty()) report.config_echo = {{"config", cfg.echo}};
    write_file(out / "report.json", fairness_report_to_json(report).dump(2) + "\n");
}

} // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Federated-learning fairness simulator for mobility data"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "Key-value config file");
    auto* seed_opt = app.add_option("--seed", g.seed, "Master seed override");
    app.add_option("--out", g.out_dir, "Output directory (default .)");

    std::string popspec_path, trajectories_path, ssim_path, model_path, rounds_path,
        registry_path, clusters_path;
    int k_flag = 0;
    bool dump_pgm = false;

    auto* generate = app.add_subcommand("generate", "Generate a synthetic population");
    generate->add_option("--popspec", popspec_path, "Population spec file")->required();

    auto* profile = app.add_subcommand("profile", "Entropy and predictability per user");
    profile->add_option("--trajectories", trajectories_path, "Trajectory CSV")->required();

    auto* ssim_cmd = app.add_subcommand("ssim", "Pairwise heatmap similarity matrices");
    ssim_cmd->add_option("--trajectories", trajectories_path, "Trajectory CSV")->required();
    ssim_cmd->add_flag("--pgm", dump_pgm, "Also dump per-user heatmaps as PGM");

    auto* cluster_cmd = app.add_subcommand("cluster", "K-medoids over a similarity matrix");
    cluster_cmd->add_option("--ssim", ssim_path, "Similarity matrix CSV")->required();
    cluster_cmd->add_option("--k", k_flag, "Number of clusters");

    auto* simulate = app.add_subcommand("simulate", "Run the federated simulation");

    auto* audit = app.add_subcommand("audit", "Audit a model on fresh synthetic data");
    audit->add_option("--model", model_path, "model.bin to audit")->required();
    audit->add_option("--popspec", popspec_path, "Population spec file")->required();

    auto* report = app.add_subcommand("report", "Fairness report from simulation outputs");
    report->add_option("--rounds", rounds_path, "rounds.jsonl")->required();
    report->add_option("--registry", registry_path, "registry.csv")->required();
    report->add_option("--clusters", clusters_path, "clusters.csv (optional)");

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    g.seed_set = seed_opt->count() > 0;

    try {
        if (generate->parsed()) cmd_generate(g, popspec_path);
        if (profile->parsed()) cmd_profile(g, trajectories_path);
        if (ssim_cmd->parsed()) cmd_ssim(g, trajectories_path, dump_pgm);
        if (cluster_cmd->parsed()) cmd_cluster(g, ssim_path, k_flag);
        if (simulate->parsed()) cmd_simulate(g);
        if (audit->parsed()) cmd_audit(g, model_path, popspec_path);
        if (report->parsed()) cmd_report(g, rounds_path, registry_path, clusters_path);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

int cli_main(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("mobifair");
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

} // namespace mobifair
