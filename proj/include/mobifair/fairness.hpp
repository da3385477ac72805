#pragma once

#include "mobifair/cluster.hpp"
#include "mobifair/model.hpp"
#include "mobifair/selection.hpp"
#include "mobifair/synthgen.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mobifair {

struct OutcomeRecord {
    std::string user_id;
    double accuracy = 0.0;
    bool accepted = false; // accuracy >= accept_threshold
    std::string group;
    std::string z_bucket;
};

enum class ZScheme { pi_max_quantiles, record_count_quantiles };

// q quantile buckets labeled z0..z(q-1); boundary values fall into the lower
// bucket.
std::map<std::string, std::string> quantile_buckets(
    std::vector<std::pair<std::string, double>> values, int q);
std::map<std::string, std::string> bucketize_z(const ClientRegistry& reg, ZScheme scheme,
                                               int q);

std::vector<OutcomeRecord> make_outcomes(const std::map<std::string, double>& accuracy,
                                         const ClientRegistry& reg,
                                         const std::map<std::string, std::string>& z_of,
                                         double accept_threshold);

struct GroupCell {
    std::string z;
    std::map<std::string, double> rate; // acceptance rate per group
    std::optional<double> ratio;        // min rate / max rate
    bool satisfied = false;
    bool counted = true; // false: excluded from the overall conjunction
    std::string note;
};

struct GroupFairnessReport {
    double epsilon = 0.0;
    std::vector<GroupCell> cells;
    std::optional<bool> satisfied; // empty when no cell produced a ratio
};

// Acceptance-rate ratio per mobility bucket: satisfied iff min/max >= 1 - eps
// in every counted bucket. Groups missing from a bucket flag it as
// insufficient data rather than failing the run.
GroupFairnessReport group_fairness(const std::vector<OutcomeRecord>& outcomes, double epsilon);

struct GapReport {
    std::map<std::string, double> gap; // per bin / per cluster max - min accuracy
    double max_gap = 0.0;
};

// Accuracy spread among users with the same predictability level.
GapReport individual_fairness_pi(const std::vector<OutcomeRecord>& outcomes,
                                 const std::map<std::string, double>& pi_of,
                                 double bin_width);

// Accuracy spread within mobility-similarity clusters.
GapReport individual_fairness_ssim(const std::vector<OutcomeRecord>& outcomes,
                                   const std::map<std::string, int>& cluster_of);

struct FairnessReport {
    GroupFairnessReport group;
    GapReport individual_pi;
    GapReport individual_ssim;
    nlohmann::json audit = nlohmann::json(nullptr);
    nlohmann::json config_echo = nlohmann::json::object();
};

struct AuditParams {
    double epsilon = 0.2;
    double accept_threshold = 0.5;
    int z_buckets = 2;
    double pi_bin_width = 0.1;
    int cluster_k = 2;
    int window = 2;
};

// Fresh synthetic population -> frozen-model accuracy per synthetic user ->
// the full metric battery. Deterministic given (model, spec, seed).
FairnessReport audit_with_synthetic(const GlobalModel& model, const PopulationSpec& spec,
                                    std::uint64_t seed, const AuditParams& params);

nlohmann::json fairness_report_to_json(const FairnessReport& report);

} // namespace mobifair
