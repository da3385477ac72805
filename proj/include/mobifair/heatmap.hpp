#pragma once

#include "mobifair/geo.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace mobifair {

struct FrequencyMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<std::int64_t> counts; // row-major

    std::int64_t& at(int r, int c) { return counts[static_cast<std::size_t>(r) * cols + c]; }
    std::int64_t at(int r, int c) const { return counts[static_cast<std::size_t>(r) * cols + c]; }
};

struct Heatmap {
    int rows = 0;
    int cols = 0;
    std::vector<double> v; // row-major intensities in [0, 1]

    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
};

struct SsimParams {
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0; // intensities live in [0, 1]
    int window = 8;

    double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
    double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
};

struct SimilarityMatrix {
    std::vector<std::string> user_ids;
    std::vector<double> values; // n x n row-major, symmetric, unit diagonal

    std::size_t size() const { return user_ids.size(); }
    double at(std::size_t i, std::size_t j) const { return values[i * user_ids.size() + j]; }
    double mean_off_diagonal() const;
};

FrequencyMatrix build_fm(const CellSequence& seq, const Grid& grid);

// Log-normalized intensity image: with max count m >= 2, nonzero counts map
// to ln(count)/ln(m); m == 1 maps its nonzero cells to 1.
Heatmap normalize_fm(const FrequencyMatrix& fm);

// Mean SSIM over all fully-contained NxN windows at stride 1. Population
// variance (divisor N^2).
double ssim(const Heatmap& x, const Heatmap& y, const SsimParams& p);

// Pairwise SSIM over users in ascending user_id order; each unordered pair
// evaluated once, diagonal exactly 1. The default entry point runs pairs in
// parallel; the serial twin is the reference the tests compare against.
SimilarityMatrix ssim_matrix(const std::map<std::string, Heatmap>& heatmaps,
                             const SsimParams& p);
SimilarityMatrix ssim_matrix_serial(const std::map<std::string, Heatmap>& heatmaps,
                                    const SsimParams& p);

// Plain-text PGM (P2), maxval 255, round-half-up.
std::string to_pgm(const Heatmap& h);

std::string similarity_to_csv(const SimilarityMatrix& sm);
SimilarityMatrix similarity_from_csv(std::string_view csv);

} // namespace mobifair
