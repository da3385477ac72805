#include "mobifair/cluster.hpp"
#include "mobifair/errors.hpp"
#include "mobifair/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace mobifair {

DistanceMatrix to_distance(const SimilarityMatrix& sm) {
    DistanceMatrix d;
    d.user_ids = sm.user_ids;
    const std::size_t n = sm.user_ids.size();
    d.values.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            d.values[i * n + j] =
                i == j ? 0.0 : std::clamp(1.0 - sm.at(i, j), 0.0, 2.0);
    return d;
}

ClusterAssignment kmedoids(const DistanceMatrix& d, int k, std::uint64_t seed,
                           int max_iters) {
    const std::size_t n = d.size();
    if (k < 1 || static_cast<std::size_t>(k) > n)
        throw data_error("kmedoids: k must be in [1, n]");

    rng::Engine eng(seed);
    std::vector<std::size_t> medoids = eng.sample_without_replacement(n, k);
    std::sort(medoids.begin(), medoids.end());

    std::vector<int> assign(n, 0);
    auto assign_all = [&](std::vector<int>& out) {
        // independent per-user writes; parallel scheduling cannot change them
#pragma omp parallel for schedule(static)
        for (std::size_t u = 0; u < n; ++u) {
            int best_c = 0;
            double best_d = d.at(u, medoids[0]);
            for (int c = 1; c < k; ++c) {
                const double dist = d.at(u, medoids[c]);
                if (dist < best_d) {
                    best_d = dist;
                    best_c = c;
                }
            }
            out[u] = best_c;
        }
    };

    auto nearest_medoid_cost = [&](const std::vector<std::size_t>& meds) {
        double cost = 0.0;
        for (std::size_t u = 0; u < n; ++u) {
            double best = d.at(u, meds[0]);
            for (int c = 1; c < k; ++c) best = std::min(best, d.at(u, meds[c]));
            cost += best;
        }
        return cost;
    };

    assign_all(assign);
    int iter = 0;
    for (; iter < max_iters; ++iter) {
        // medoid update: member minimizing total intra-cluster distance,
        // ties to the lowest user index
        bool medoids_changed = false;
        for (int c = 0; c < k; ++c) {
            std::size_t best_m = medoids[c];
            double best_cost = std::numeric_limits<double>::infinity();
            for (std::size_t cand = 0; cand < n; ++cand) {
                if (assign[cand] != c) continue;
                double cost = 0.0;
                for (std::size_t u = 0; u < n; ++u)
                    if (assign[u] == c) cost += d.at(u, cand);
                if (cost < best_cost) {
                    best_cost = cost;
                    best_m = cand;
                }
            }
            if (best_m != medoids[c]) {
                medoids[c] = best_m;
                medoids_changed = true;
            }
        }

        std::vector<int> next(n, 0);
        assign_all(next);
        if (!medoids_changed && next == assign) {
            // alternation has converged; PAM swap step to escape split-brain
            // optima (alternation alone cannot move a medoid across clusters)
            double current = nearest_medoid_cost(medoids);
            int best_c = -1;
            std::size_t best_x = 0;
            double best_cost = current;
            for (int c = 0; c < k; ++c) {
                for (std::size_t x = 0; x < n; ++x) {
                    bool is_medoid = false;
                    for (int c2 = 0; c2 < k; ++c2) is_medoid |= medoids[c2] == x;
                    if (is_medoid) continue;
                    auto trial = medoids;
                    trial[c] = x;
                    const double cost = nearest_medoid_cost(trial);
                    if (cost < best_cost - 1e-12) {
                        best_cost = cost;
                        best_c = c;
                        best_x = x;
                    }
                }
            }
            if (best_c < 0) break;
            medoids[best_c] = best_x;
            assign_all(next);
        }
        assign = std::move(next);
    }

    ClusterAssignment a;
    a.user_ids = d.user_ids;
    a.cluster_of = std::move(assign);
    a.medoids = std::move(medoids);
    a.k = k;
    a.iterations = iter;
    for (std::size_t u = 0; u < n; ++u) a.total_cost += d.at(u, a.medoids[a.cluster_of[u]]);
    return a;
}

double silhouette(const DistanceMatrix& d, const ClusterAssignment& a) {
    const std::size_t n = d.size();
    if (a.k < 2) throw data_error("silhouette: need k >= 2");
    if (a.cluster_of.size() != n) throw data_error("silhouette: assignment size mismatch");

    std::vector<std::size_t> cluster_size(a.k, 0);
    for (int c : a.cluster_of) ++cluster_size[c];
    for (int c = 0; c < a.k; ++c)
        if (cluster_size[c] == 0) throw data_error("silhouette: empty cluster");

    double total = 0.0;
    for (std::size_t u = 0; u < n; ++u) {
        const int own = a.cluster_of[u];
        if (cluster_size[own] == 1) continue; // contributes 0

        std::vector<double> sum(a.k, 0.0);
        for (std::size_t v = 0; v < n; ++v)
            if (v != u) sum[a.cluster_of[v]] += d.at(u, v);

        const double a_u = sum[own] / static_cast<double>(cluster_size[own] - 1);
        double b_u = std::numeric_limits<double>::infinity();
        for (int c = 0; c < a.k; ++c) {
            if (c == own) continue;
            b_u = std::min(b_u, sum[c] / static_cast<double>(cluster_size[c]));
        }
        const double denom = std::max(a_u, b_u);
        if (denom > 0.0) total += (b_u - a_u) / denom;
    }
    return total / static_cast<double>(n);
}

std::string assignment_to_csv(const ClusterAssignment& a) {
    std::ostringstream os;
    os << "user_id,cluster\n";
    for (std::size_t u = 0; u < a.user_ids.size(); ++u)
        os << a.user_ids[u] << ',' << a.cluster_of[u] << '\n';
    return os.str();
}

ClusterAssignment assignment_from_csv(std::string_view csv) {
    ClusterAssignment a;
    std::size_t pos = 0;
    bool first = true;
    int max_cluster = -1;
    while (pos < csv.size()) {
        std::size_t nl = csv.find('\n', pos);
        std::string_view line = csv.substr(pos, nl == std::string_view::npos ? csv.size() - pos
                                                                             : nl - pos);
        pos = nl == std::string_view::npos ? csv.size() : nl + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (first) {
            if (line != "user_id,cluster") throw data_error("cluster csv: malformed header");
            first = false;
            continue;
        }
        const std::size_t comma = line.find(',');
        if (comma == std::string_view::npos) throw data_error("cluster csv: malformed row");
        int c = 0;
        auto f = line.substr(comma + 1);
        auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), c);
        if (ec != std::errc() || ptr != f.data() + f.size() || c < 0)
            throw data_error("cluster csv: bad cluster index");
        a.user_ids.emplace_back(line.substr(0, comma));
        a.cluster_of.push_back(c);
        max_cluster = std::max(max_cluster, c);
    }
    if (first) throw data_error("cluster csv: empty file");
    a.k = max_cluster + 1;
    return a;
}

} // namespace mobifair
