#pragma once

#include "mobifair/heatmap.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mobifair {

struct DistanceMatrix {
    std::vector<std::string> user_ids;
    std::vector<double> values; // n x n row-major, symmetric, zero diagonal

    std::size_t size() const { return user_ids.size(); }
    double at(std::size_t i, std::size_t j) const { return values[i * user_ids.size() + j]; }
};

struct ClusterAssignment {
    std::vector<std::string> user_ids;
    std::vector<int> cluster_of;     // per user, in user_ids order
    std::vector<std::size_t> medoids; // per cluster, index into user_ids
    int k = 0;
    int iterations = 0;
    double total_cost = 0.0; // sum of member-to-medoid distances
};

// Elementwise 1 - similarity, clamped to [0, 2], diagonal forced to 0.
DistanceMatrix to_distance(const SimilarityMatrix& sm);

// PAM-style alternation from seed-deterministic initial medoids. Assignment
// ties go to the lower cluster index, medoid ties to the lower user index.
ClusterAssignment kmedoids(const DistanceMatrix& d, int k, std::uint64_t seed,
                           int max_iters = 100);

// Mean silhouette over users; singleton clusters contribute 0.
double silhouette(const DistanceMatrix& d, const ClusterAssignment& a);

std::string assignment_to_csv(const ClusterAssignment& a);
ClusterAssignment assignment_from_csv(std::string_view csv);

} // namespace mobifair
