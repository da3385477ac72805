#include "mobifair/selection.hpp"
#include "mobifair/errors.hpp"
#include "mobifair/rng.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace mobifair {

namespace {

std::vector<std::string> eligible_ids(const ClientRegistry& reg) {
    std::vector<std::string> ids;
    for (const auto& [id, info] : reg)
        if (info.eligible) ids.push_back(id);
    return ids;
}

// floor(m/G) each plus one extra for the first (m mod G) strata; strata that
// cannot fill their quota push the deficit onto the remaining open strata by
// the same rule until everything is placed.
std::vector<int> stratum_quotas(const std::vector<int>& capacity, int m) {
    const int g = static_cast<int>(capacity.size());
    std::vector<int> quota(g, 0);
    for (int i = 0; i < g; ++i) quota[i] = m / g + (i < m % g ? 1 : 0);

    for (;;) {
        int deficit = 0;
        for (int i = 0; i < g; ++i)
            if (quota[i] > capacity[i]) {
                deficit += quota[i] - capacity[i];
                quota[i] = capacity[i];
            }
        if (deficit == 0) break;

        std::vector<int> open;
        for (int i = 0; i < g; ++i)
            if (quota[i] < capacity[i]) open.push_back(i);
        if (open.empty()) throw data_error("selection: m exceeds eligible population");

        const int share = deficit / static_cast<int>(open.size());
        const int rem = deficit % static_cast<int>(open.size());
        for (std::size_t j = 0; j < open.size(); ++j)
            quota[open[j]] += share + (static_cast<int>(j) < rem ? 1 : 0);
    }
    return quota;
}

// Draws quota[i] members from each stratum with one shared engine, strata in
// ascending key order. With a single stratum this is exactly select_uniform.
std::vector<std::string> draw_stratified(
    const std::vector<std::vector<std::string>>& strata, const std::vector<int>& quota,
    std::uint64_t seed) {
    rng::Engine eng(seed);
    std::vector<std::string> out;
    for (std::size_t s = 0; s < strata.size(); ++s) {
        const auto picks = eng.sample_without_replacement(strata[s].size(), quota[s]);
        for (std::size_t idx : picks) out.push_back(strata[s][idx]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

std::vector<std::string> select_uniform(const ClientRegistry& reg, int m, std::uint64_t seed) {
    if (m < 0) throw data_error("selection: m must be non-negative");
    const auto ids = eligible_ids(reg);
    if (static_cast<std::size_t>(m) > ids.size())
        throw data_error("selection: m exceeds eligible population");
    return draw_stratified({ids}, {m}, seed);
}

std::vector<std::string> select_group_stratified(const ClientRegistry& reg, int m,
                                                 std::uint64_t seed) {
    if (m < 0) throw data_error("selection: m must be non-negative");
    std::map<std::string, std::vector<std::string>> by_group;
    std::size_t eligible = 0;
    for (const auto& [id, info] : reg) {
        if (!info.eligible) continue;
        by_group[info.group].push_back(id);
        ++eligible;
    }
    if (by_group.empty() || static_cast<std::size_t>(m) > eligible)
        throw data_error("selection: m exceeds eligible population");

    std::vector<std::vector<std::string>> strata;
    std::vector<int> capacity;
    for (auto& [label, members] : by_group) {
        capacity.push_back(static_cast<int>(members.size()));
        strata.push_back(std::move(members));
    }
    return draw_stratified(strata, stratum_quotas(capacity, m), seed);
}

std::vector<std::string> select_cluster_stratified(const ClientRegistry& reg, int m,
                                                   std::uint64_t seed) {
    if (m < 0) throw data_error("selection: m must be non-negative");
    std::map<int, std::vector<std::string>> by_cluster;
    std::size_t eligible = 0;
    for (const auto& [id, info] : reg) {
        if (!info.eligible) continue;
        if (info.cluster < 0)
            throw data_error("selection: user " + id + " has no cluster label");
        by_cluster[info.cluster].push_back(id);
        ++eligible;
    }
    if (by_cluster.empty() || static_cast<std::size_t>(m) > eligible)
        throw data_error("selection: m exceeds eligible population");

    std::vector<std::vector<std::string>> strata;
    std::vector<int> capacity;
    for (auto& [cluster, members] : by_cluster) {
        capacity.push_back(static_cast<int>(members.size()));
        strata.push_back(std::move(members));
    }
    return draw_stratified(strata, stratum_quotas(capacity, m), seed);
}

std::string registry_to_csv(const ClientRegistry& reg) {
    std::ostringstream os;
    os << "user_id,group,cluster,pi_max,record_count,eligible\n";
    char buf[32];
    for (const auto& [id, info] : reg) {
        std::snprintf(buf, sizeof buf, "%.17g", info.pi_max);
        os << id << ',' << info.group << ',' << info.cluster << ',' << buf << ','
           << info.record_count << ',' << (info.eligible ? 1 : 0) << '\n';
    }
    return os.str();
}

ClientRegistry registry_from_csv(std::string_view csv) {
    ClientRegistry reg;
    std::size_t pos = 0;
    bool first = true;
    std::size_t row_no = 0;
    while (pos < csv.size()) {
        std::size_t nl = csv.find('\n', pos);
        std::string_view line =
            csv.substr(pos, nl == std::string_view::npos ? csv.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? csv.size() : nl + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++row_no;
        if (line.empty()) continue;
        if (first) {
            if (line != "user_id,group,cluster,pi_max,record_count,eligible")
                throw data_error("registry csv: malformed header");
            first = false;
            continue;
        }

        std::vector<std::string_view> fields;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i)
            if (i == line.size() || line[i] == ',') {
                fields.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        if (fields.size() != 6 || fields[0].empty())
            throw data_error("registry csv: malformed row " + std::to_string(row_no));

        ClientInfo info;
        info.group = fields[1];
        auto parse = [&](std::string_view f, auto& out) {
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), out);
            if (ec != std::errc() || ptr != f.data() + f.size())
                throw data_error("registry csv: bad value in row " + std::to_string(row_no));
        };
        parse(fields[2], info.cluster);
        parse(fields[3], info.pi_max);
        parse(fields[4], info.record_count);
        int eligible = 0;
        parse(fields[5], eligible);
        info.eligible = eligible != 0;
        reg[std::string(fields[0])] = info;
    }
    if (first) throw data_error("registry csv: empty file");
    return reg;
}

} // namespace mobifair
