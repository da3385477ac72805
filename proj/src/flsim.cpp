#include "mobifair/flsim.hpp"
#include "mobifair/errors.hpp"
#include "mobifair/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mobifair {

ClientDataset build_client_dataset(const DailyLocationSequence& daily, const Grid& grid,
                                   int window, double test_fraction) {
    if (window < 1) throw config_error("build_client_dataset: window must be >= 1");
    if (!(test_fraction >= 0.0 && test_fraction < 1.0))
        throw config_error("build_client_dataset: test_fraction must be in [0, 1)");

    const int cols = grid.cols();
    ClientDataset ds;
    ds.user_id = daily.user_id;
    const std::size_t len = daily.days.size();
    if (len < static_cast<std::size_t>(window) + 1) return ds;

    const std::size_t count = len - window;
    ds.examples.reserve(count);
    for (std::size_t i = 0; i + window < len; ++i) {
        Example ex;
        ex.context.reserve(window);
        for (int t = 0; t < window; ++t) {
            const CellId c = daily.days[i + t].second;
            ex.context.push_back(c.row * cols + c.col);
        }
        const CellId lab = daily.days[i + window].second;
        ex.label = lab.row * cols + lab.col;
        ds.examples.push_back(std::move(ex));
    }

    const std::size_t test_count =
        static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(count)));
    ds.train_count = count - test_count;
    ds.eligible = len >= static_cast<std::size_t>(window) + 2 && ds.train_count >= 1;
    return ds;
}

ClientUpdate local_train(const GlobalModel& model, const ClientDataset& ds, int epochs,
                         double lr, std::uint64_t seed) {
    (void)seed; // full-batch: nothing to shuffle
    if (!(lr > 0.0)) throw config_error("local_train: lr must be > 0");
    if (epochs < 1) throw config_error("local_train: epochs must be >= 1");
    if (!ds.eligible || ds.train_count < 1)
        throw data_error("local_train: client " + ds.user_id + " ineligible");

    ClientUpdate up;
    up.user_id = ds.user_id;
    up.num_samples = static_cast<std::int64_t>(ds.train_count);
    up.new_params = model.params;

    std::vector<double> grad;
    double loss = 0.0;
    for (int e = 0; e < epochs; ++e) {
        loss = mean_loss(model.spec, up.new_params, ds.train(), &grad);
        if (!std::isfinite(loss))
            throw data_error("local_train: non-finite loss for client " + ds.user_id);
        for (std::size_t i = 0; i < up.new_params.size(); ++i)
            up.new_params[i] -= lr * grad[i];
    }
    up.train_loss = mean_loss(model.spec, up.new_params, ds.train());
    if (!std::isfinite(up.train_loss))
        throw data_error("local_train: non-finite loss for client " + ds.user_id);
    up.local_accuracy = accuracy(model.spec, up.new_params, ds.test());
    return up;
}

std::vector<ClientUpdate> train_clients(const GlobalModel& model,
                                        const std::map<std::string, ClientDataset>& datasets,
                                        const std::vector<std::string>& ids, int epochs,
                                        double lr, std::uint64_t master_seed, int round_index,
                                        bool parallel) {
    std::vector<const ClientDataset*> selected(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto it = datasets.find(ids[i]);
        if (it == datasets.end())
            throw data_error("train_clients: no dataset for client " + ids[i]);
        selected[i] = &it->second;
    }

    std::vector<ClientUpdate> updates(ids.size());
    std::exception_ptr error;
    // independent per-client slots; the derived seed makes each client's
    // stream independent of scheduling
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::size_t i = 0; i < ids.size(); ++i) {
        try {
            const std::uint64_t seed = rng::derive(
                master_seed, "local_train", static_cast<std::uint64_t>(round_index), ids[i]);
            updates[i] = local_train(model, *selected[i], epochs, lr, seed);
        } catch (...) {
#pragma omp critical
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
    return updates;
}

Aggregation aggregation_from_string(const std::string& name) {
    if (name == "fedavg") return Aggregation::fedavg;
    if (name == "uniform") return Aggregation::uniform;
    if (name == "group_balanced") return Aggregation::group_balanced;
    if (name == "predictability_weighted") return Aggregation::predictability_weighted;
    throw config_error("unknown aggregation strategy '" + name + "'");
}

const char* to_string(Aggregation a) {
    switch (a) {
        case Aggregation::fedavg: return "fedavg";
        case Aggregation::uniform: return "uniform";
        case Aggregation::group_balanced: return "group_balanced";
        case Aggregation::predictability_weighted: return "predictability_weighted";
    }
    return "?";
}

std::vector<double> aggregate(const std::vector<ClientUpdate>& updates, Aggregation strategy,
                              const std::map<std::string, std::string>& group_of,
                              const std::map<std::string, double>& pi_of) {
    if (updates.empty()) throw data_error("aggregate: no updates");
    const std::size_t dim = updates[0].new_params.size();
    for (const auto& up : updates)
        if (up.new_params.size() != dim) throw data_error("aggregate: parameter length mismatch");

    // fixed fold order: ascending user_id, independent of caller order
    std::vector<std::size_t> order(updates.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return updates[a].user_id < updates[b].user_id;
    });

    std::vector<double> weights(updates.size(), 0.0);
    switch (strategy) {
        case Aggregation::fedavg:
            for (std::size_t i = 0; i < updates.size(); ++i) {
                if (updates[i].num_samples < 1)
                    throw data_error("aggregate: num_samples must be >= 1");
                weights[i] = static_cast<double>(updates[i].num_samples);
            }
            break;
        case Aggregation::uniform:
            for (double& w : weights) w = 1.0;
            break;
        case Aggregation::group_balanced: {
            std::map<std::string, int> group_sizes;
            for (const auto& up : updates) {
                const auto it = group_of.find(up.user_id);
                if (it == group_of.end())
                    throw data_error("aggregate: unknown group for client " + up.user_id);
                ++group_sizes[it->second];
            }
            const double n_groups = static_cast<double>(group_sizes.size());
            for (std::size_t i = 0; i < updates.size(); ++i) {
                const auto& g = group_of.at(updates[i].user_id);
                weights[i] = 1.0 / (n_groups * group_sizes.at(g));
            }
            break;
        }
        case Aggregation::predictability_weighted:
            for (std::size_t i = 0; i < updates.size(); ++i) {
                const auto it = pi_of.find(updates[i].user_id);
                if (it == pi_of.end())
                    throw data_error("aggregate: unknown pi_max for client " +
                                     updates[i].user_id);
                weights[i] = (1.0 - it->second) + kPredictabilityWeightFloor;
            }
            break;
    }

    double total = 0.0;
    for (std::size_t i : order) total += weights[i];
    if (!(total > 0.0)) throw data_error("aggregate: degenerate weights");

    std::vector<double> out(dim, 0.0);
    for (std::size_t i : order) {
        const double w = weights[i] / total;
        const auto& p = updates[i].new_params;
        for (std::size_t j = 0; j < dim; ++j) out[j] += w * p[j];
    }
    return out;
}

SimulationResult run_simulation(const SimConfig& cfg, const ModelSpec& spec,
                                const std::map<std::string, ClientDataset>& datasets,
                                const ClientRegistry& registry) {
    const Aggregation agg = aggregation_from_string(cfg.aggregation_strategy);

    // eligibility additionally requires a dataset
    ClientRegistry reg = registry;
    for (auto& [id, info] : reg)
        if (info.eligible && datasets.find(id) == datasets.end()) info.eligible = false;

    std::map<std::string, std::string> group_of;
    std::map<std::string, double> pi_of;
    for (const auto& [id, info] : reg) {
        group_of[id] = info.group;
        pi_of[id] = info.pi_max;
    }

    auto select = [&](int round) {
        const std::uint64_t seed =
            rng::derive(cfg.master_seed, "select", static_cast<std::uint64_t>(round));
        if (cfg.selection_strategy == "uniform")
            return select_uniform(reg, cfg.clients_per_round, seed);
        if (cfg.selection_strategy == "group_stratified")
            return select_group_stratified(reg, cfg.clients_per_round, seed);
        if (cfg.selection_strategy == "cluster_stratified")
            return select_cluster_stratified(reg, cfg.clients_per_round, seed);
        throw config_error("unknown selection strategy '" + cfg.selection_strategy + "'");
    };

    SimulationResult result;
    result.model = GlobalModel::zeros(spec);

    for (int round = 0; round < cfg.rounds; ++round) {
        RoundRecord rec;
        rec.round_index = round;
        rec.aggregation = cfg.aggregation_strategy;
        try {
            rec.selected = select(round);
            const auto updates = train_clients(result.model, datasets, rec.selected,
                                               cfg.epochs, cfg.lr, cfg.master_seed, round);
            result.model.params = aggregate(updates, agg, group_of, pi_of);
        } catch (const data_error& e) {
            throw data_error("round " + std::to_string(round) + ": " + e.what());
        }

        for (const auto& [id, info] : reg) {
            if (!info.eligible) continue;
            const auto& ds = datasets.at(id);
            rec.test_accuracy[id] =
                accuracy(result.model.spec, result.model.params, ds.test());
        }
        result.rounds.push_back(std::move(rec));
    }
    return result;
}

std::string round_to_json(const RoundRecord& r) {
    nlohmann::json j{{"round", r.round_index},
                     {"selected", r.selected},
                     {"aggregation", r.aggregation},
                     {"test_accuracy", r.test_accuracy}};
    return j.dump();
}

std::vector<RoundRecord> rounds_from_jsonl(std::string_view text) {
    std::vector<RoundRecord> rounds;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        if (line.empty()) continue;

        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw data_error("rounds.jsonl: malformed JSON line");
        RoundRecord r;
        try {
            r.round_index = j.at("round").get<int>();
            r.selected = j.at("selected").get<std::vector<std::string>>();
            r.aggregation = j.at("aggregation").get<std::string>();
            r.test_accuracy = j.at("test_accuracy").get<std::map<std::string, double>>();
        } catch (const nlohmann::json::exception&) {
            throw data_error("rounds.jsonl: missing or mistyped field");
        }
        rounds.push_back(std::move(r));
    }
    return rounds;
}

} // namespace mobifair
