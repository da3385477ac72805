#pragma once

#include "mobifair/config.hpp"
#include "mobifair/geo.hpp"
#include "mobifair/model.hpp"
#include "mobifair/selection.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mobifair {

struct ClientDataset {
    std::string user_id;
    std::vector<Example> examples; // chronological sliding windows
    std::size_t train_count = 0;   // prefix is train, suffix is test
    bool eligible = false;         // enough data to train and test on

    std::span<const Example> train() const {
        return {examples.data(), train_count};
    }
    std::span<const Example> test() const {
        return {examples.data() + train_count, examples.size() - train_count};
    }
};

// Sliding windows of length `window` predicting the next cell; the last
// ceil(test_fraction * count) examples are the chronological test split.
// Sequences shorter than window + 2 produce an ineligible dataset, not an
// error.
ClientDataset build_client_dataset(const DailyLocationSequence& daily, const Grid& grid,
                                   int window, double test_fraction);

struct ClientUpdate {
    std::string user_id;
    std::vector<double> new_params;
    std::int64_t num_samples = 0; // training examples
    double train_loss = 0.0;
    double local_accuracy = 0.0; // test accuracy under new_params
};

// Full-batch gradient descent on the cross-entropy loss. Deterministic; the
// seed shuffles nothing in full-batch mode and exists for forward
// compatibility.
ClientUpdate local_train(const GlobalModel& model, const ClientDataset& ds, int epochs,
                         double lr, std::uint64_t seed);

// One round's local training across clients; per-client seeds are derived
// from (master_seed, round_index, user_id). Parallel by default; the serial
// path is the reference the tests compare against.
std::vector<ClientUpdate> train_clients(const GlobalModel& model,
                                        const std::map<std::string, ClientDataset>& datasets,
                                        const std::vector<std::string>& ids, int epochs,
                                        double lr, std::uint64_t master_seed, int round_index,
                                        bool parallel = true);

enum class Aggregation { fedavg, uniform, group_balanced, predictability_weighted };

Aggregation aggregation_from_string(const std::string& name);
const char* to_string(Aggregation a);

// Weighted mean of client parameter vectors, weights normalized to sum 1 and
// folded in ascending user_id order. The predictability weight floor keeps
// fully predictable clients from vanishing.
inline constexpr double kPredictabilityWeightFloor = 0.05;

std::vector<double> aggregate(const std::vector<ClientUpdate>& updates, Aggregation strategy,
                              const std::map<std::string, std::string>& group_of,
                              const std::map<std::string, double>& pi_of);

struct RoundRecord {
    int round_index = 0;
    std::vector<std::string> selected;
    std::string aggregation;
    std::map<std::string, double> test_accuracy; // every eligible client, post-round
};

struct SimulationResult {
    std::vector<RoundRecord> rounds;
    GlobalModel model;
};

// Deterministic multi-round simulation: select, train locally, aggregate,
// evaluate everyone. A pure function of (spec, datasets, registry, cfg).
SimulationResult run_simulation(const SimConfig& cfg, const ModelSpec& spec,
                                const std::map<std::string, ClientDataset>& datasets,
                                const ClientRegistry& registry);

std::string round_to_json(const RoundRecord& r);
std::vector<RoundRecord> rounds_from_jsonl(std::string_view text);

} // namespace mobifair
