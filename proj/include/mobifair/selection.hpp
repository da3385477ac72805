#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace mobifair {

struct ClientInfo {
    bool eligible = true;
    std::string group;      // sensitive attribute label
    int cluster = -1;       // -1 until a cluster assignment exists
    double pi_max = 0.0;
    std::int64_t record_count = 0;
};

// Keyed by user_id; map order doubles as the deterministic fold order.
using ClientRegistry = std::map<std::string, ClientInfo>;

// All selectors return sorted, duplicate-free sets of eligible users of size
// exactly m. Stratified quotas are floor(m/strata) with the remainder (and
// any deficit from undersized strata) handed out in ascending stratum order.
std::vector<std::string> select_uniform(const ClientRegistry& reg, int m, std::uint64_t seed);
std::vector<std::string> select_group_stratified(const ClientRegistry& reg, int m,
                                                 std::uint64_t seed);
std::vector<std::string> select_cluster_stratified(const ClientRegistry& reg, int m,
                                                   std::uint64_t seed);

std::string registry_to_csv(const ClientRegistry& reg);
ClientRegistry registry_from_csv(std::string_view csv);

} // namespace mobifair
