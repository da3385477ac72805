#include "mobifair/fairness.hpp"
#include "mobifair/errors.hpp"
#include "mobifair/flsim.hpp"
#include "mobifair/profile.hpp"
#include "mobifair/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace mobifair {

std::map<std::string, std::string> quantile_buckets(
    std::vector<std::pair<std::string, double>> values, int q) {
    const std::size_t n = values.size();
    if (q < 1 || static_cast<std::size_t>(q) > n)
        throw data_error("bucketize_z: need 1 <= q <= population size");

    std::vector<double> sorted;
    sorted.reserve(n);
    for (const auto& [id, v] : values) sorted.push_back(v);
    std::sort(sorted.begin(), sorted.end());

    // edge of bucket b: value at rank ceil((b+1) * n / q) - 1; assignment is
    // the first bucket whose edge is >= the value, so ties land low
    std::vector<double> edges(q);
    for (int b = 0; b < q; ++b) {
        const std::size_t rank =
            (static_cast<std::size_t>(b + 1) * n + q - 1) / q; // ceil
        edges[b] = sorted[rank - 1];
    }

    std::map<std::string, std::string> out;
    for (const auto& [id, v] : values) {
        int bucket = q - 1;
        for (int b = 0; b < q; ++b)
            if (v <= edges[b]) {
                bucket = b;
                break;
            }
        out[id] = "z" + std::to_string(bucket);
    }
    return out;
}

std::map<std::string, std::string> bucketize_z(const ClientRegistry& reg, ZScheme scheme,
                                               int q) {
    std::vector<std::pair<std::string, double>> values;
    values.reserve(reg.size());
    for (const auto& [id, info] : reg)
        values.emplace_back(id, scheme == ZScheme::pi_max_quantiles
                                    ? info.pi_max
                                    : static_cast<double>(info.record_count));
    return quantile_buckets(std::move(values), q);
}

std::vector<OutcomeRecord> make_outcomes(const std::map<std::string, double>& accuracy,
                                         const ClientRegistry& reg,
                                         const std::map<std::string, std::string>& z_of,
                                         double accept_threshold) {
    std::vector<OutcomeRecord> out;
    out.reserve(accuracy.size());
    for (const auto& [id, acc] : accuracy) {
        const auto rit = reg.find(id);
        if (rit == reg.end()) throw data_error("make_outcomes: user " + id + " not in registry");
        OutcomeRecord rec;
        rec.user_id = id;
        rec.accuracy = acc;
        rec.accepted = acc >= accept_threshold;
        rec.group = rit->second.group;
        const auto zit = z_of.find(id);
        rec.z_bucket = zit == z_of.end() ? "z0" : zit->second;
        out.push_back(std::move(rec));
    }
    return out;
}

GroupFairnessReport group_fairness(const std::vector<OutcomeRecord>& outcomes, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
        throw config_error("group_fairness: epsilon in [0, 1]");
    if (outcomes.empty()) throw data_error("group_fairness: no outcomes");

    std::set<std::string> groups, zs;
    for (const auto& o : outcomes) {
        groups.insert(o.group);
        zs.insert(o.z_bucket);
    }

    GroupFairnessReport report;
    report.epsilon = epsilon;

    for (const auto& z : zs) {
        GroupCell cell;
        cell.z = z;

        std::map<std::string, std::pair<std::int64_t, std::int64_t>> tally; // accepted, total
        for (const auto& o : outcomes) {
            if (o.z_bucket != z) continue;
            auto& [acc, total] = tally[o.group];
            acc += o.accepted ? 1 : 0;
            ++total;
        }

        bool missing_group = false;
        for (const auto& g : groups)
            if (tally.find(g) == tally.end()) missing_group = true;
        for (const auto& [g, t] : tally)
            cell.rate[g] = static_cast<double>(t.first) / static_cast<double>(t.second);

        if (missing_group) {
            cell.counted = false;
            cell.satisfied = false;
            cell.note = "insufficient data: a group has no members in this bucket";
        } else if (groups.size() < 2) {
            cell.counted = false;
            cell.satisfied = false;
            cell.note = "ratio undefined: need at least 2 groups";
        } else {
            double min_rate = 1.0, max_rate = 0.0;
            for (const auto& [g, r] : cell.rate) {
                min_rate = std::min(min_rate, r);
                max_rate = std::max(max_rate, r);
            }
            if (max_rate == 0.0) {
                cell.satisfied = false;
                cell.note = "ratio undefined: all acceptance rates are zero";
            } else {
                cell.ratio = min_rate / max_rate;
                cell.satisfied = *cell.ratio >= 1.0 - epsilon;
            }
        }
        report.cells.push_back(std::move(cell));
    }

    bool any_counted = false, all_ok = true;
    for (const auto& cell : report.cells) {
        if (!cell.counted) continue;
        any_counted = true;
        all_ok = all_ok && cell.satisfied;
    }
    if (any_counted) report.satisfied = all_ok;
    return report;
}

GapReport individual_fairness_pi(const std::vector<OutcomeRecord>& outcomes,
                                 const std::map<std::string, double>& pi_of,
                                 double bin_width) {
    if (!(bin_width > 0.0 && bin_width <= 1.0))
        throw config_error("individual_fairness_pi: bin_width in (0, 1]");

    const int n_bins = static_cast<int>(std::ceil(1.0 / bin_width));
    std::map<int, std::pair<double, double>> range; // bin -> (min, max accuracy)
    for (const auto& o : outcomes) {
        const auto it = pi_of.find(o.user_id);
        if (it == pi_of.end())
            throw data_error("individual_fairness_pi: no pi_max for user " + o.user_id);
        int bin = static_cast<int>(std::floor(it->second / bin_width));
        bin = std::clamp(bin, 0, n_bins - 1); // pi_max == 1 lands in the top bin
        auto [rit, inserted] = range.try_emplace(bin, o.accuracy, o.accuracy);
        if (!inserted) {
            rit->second.first = std::min(rit->second.first, o.accuracy);
            rit->second.second = std::max(rit->second.second, o.accuracy);
        }
    }

    GapReport report;
    for (const auto& [bin, mm] : range) {
        const double gap = mm.second - mm.first;
        char label[48];
        std::snprintf(label, sizeof label, "pi[%g,%g)", bin * bin_width,
                      (bin + 1) * bin_width);
        report.gap[label] = gap;
        report.max_gap = std::max(report.max_gap, gap);
    }
    return report;
}

GapReport individual_fairness_ssim(const std::vector<OutcomeRecord>& outcomes,
                                   const std::map<std::string, int>& cluster_of) {
    std::map<int, std::pair<double, double>> range;
    for (const auto& o : outcomes) {
        const auto it = cluster_of.find(o.user_id);
        if (it == cluster_of.end())
            throw data_error("individual_fairness_ssim: no cluster for user " + o.user_id);
        auto [rit, inserted] = range.try_emplace(it->second, o.accuracy, o.accuracy);
        if (!inserted) {
            rit->second.first = std::min(rit->second.first, o.accuracy);
            rit->second.second = std::max(rit->second.second, o.accuracy);
        }
    }

    GapReport report;
    for (const auto& [cluster, mm] : range) {
        const double gap = mm.second - mm.first;
        report.gap["cluster" + std::to_string(cluster)] = gap;
        report.max_gap = std::max(report.max_gap, gap);
    }
    return report;
}

FairnessReport audit_with_synthetic(const GlobalModel& model, const PopulationSpec& spec,
                                    std::uint64_t seed, const AuditParams& params) {
    PopulationSpec fresh = spec;
    fresh.seed = seed;
    Population pop = generate_population(fresh);

    const int vocab = fresh.grid.rows() * fresh.grid.cols();
    if (vocab != model.spec.num_cells)
        throw data_error("audit: population grid vocabulary does not match model");

    // frozen model, fresh data: every example is held out, so score them all
    std::map<std::string, double> acc;
    std::map<std::string, Heatmap> heatmaps;
    for (const auto& [id, daily] : pop.daily) {
        const auto ds = build_client_dataset(daily, fresh.grid, model.spec.window, 0.0);
        if (ds.examples.empty()) continue;
        acc[id] = accuracy(model.spec, model.params, ds.examples);

        auto& info = pop.registry[id];
        info.pi_max = build_profile(daily).pi_max;

        CellSequence seq;
        seq.user_id = id;
        for (const auto& [day, cell] : daily.days) seq.cells.emplace_back(day * 86400, cell);
        heatmaps[id] = normalize_fm(build_fm(seq, fresh.grid));
    }
    if (acc.empty()) throw data_error("audit: no scorable synthetic users");

    std::map<std::string, double> pi_of;
    for (const auto& [id, info] : pop.registry)
        if (acc.count(id)) pi_of[id] = info.pi_max;

    const auto z_of =
        bucketize_z(pop.registry, ZScheme::pi_max_quantiles, params.z_buckets);
    const auto outcomes = make_outcomes(acc, pop.registry, z_of, params.accept_threshold);

    FairnessReport report;
    report.group = group_fairness(outcomes, params.epsilon);
    report.individual_pi = individual_fairness_pi(outcomes, pi_of, params.pi_bin_width);

    if (heatmaps.size() >= 2 && params.cluster_k >= 2 &&
        static_cast<std::size_t>(params.cluster_k) <= heatmaps.size()) {
        SsimParams sp;
        sp.window = std::min({sp.window, fresh.grid.rows(), fresh.grid.cols()});
        const auto sm = ssim_matrix(heatmaps, sp);
        const auto assignment = kmedoids(to_distance(sm), params.cluster_k,
                                         rng::derive(seed, "audit.cluster"));
        std::map<std::string, int> cluster_of;
        for (std::size_t i = 0; i < assignment.user_ids.size(); ++i)
            cluster_of[assignment.user_ids[i]] = assignment.cluster_of[i];
        report.individual_ssim = individual_fairness_ssim(outcomes, cluster_of);
    }

    report.audit = {{"synthetic_users", acc.size()},
                    {"seed", seed},
                    {"epsilon", params.epsilon},
                    {"accept_threshold", params.accept_threshold}};
    return report;
}

nlohmann::json fairness_report_to_json(const FairnessReport& report) {
    nlohmann::json group_cells = nlohmann::json::array();
    for (const auto& cell : report.group.cells) {
        nlohmann::json j{{"z", cell.z},
                         {"rates", cell.rate},
                         {"satisfied", cell.satisfied},
                         {"counted", cell.counted}};
        j["ratio"] = cell.ratio ? nlohmann::json(*cell.ratio) : nlohmann::json(nullptr);
        if (!cell.note.empty()) j["note"] = cell.note;
        group_cells.push_back(std::move(j));
    }

    nlohmann::json group{{"epsilon", report.group.epsilon}, {"cells", group_cells}};
    group["satisfied"] =
        report.group.satisfied ? nlohmann::json(*report.group.satisfied) : nlohmann::json(nullptr);

    return {{"group", group},
            {"individual_pi", {{"gaps", report.individual_pi.gap},
                               {"max_gap", report.individual_pi.max_gap}}},
            {"individual_ssim", {{"gaps", report.individual_ssim.gap},
                                 {"max_gap", report.individual_ssim.max_gap}}},
            {"audit", report.audit},
            {"config_echo", report.config_echo}};
}

} // namespace mobifair
