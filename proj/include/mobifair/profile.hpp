#pragma once

#include "mobifair/geo.hpp"

#include <span>
#include <string>
#include <vector>

namespace mobifair {

enum class EntropyMethod { lempel_ziv, literal_eq1 };

const char* entropy_method_name(EntropyMethod m);

struct EntropyEstimate {
    double value_bits = 0.0;
    EntropyMethod method = EntropyMethod::lempel_ziv;
};

struct MobilityProfile {
    std::string user_id;
    EntropyEstimate entropy;
    int distinct_locations = 0;
    double pi_max = 0.0;
    int sequence_length = 0;
};

int distinct_locations(const DailyLocationSequence& seq);

// Match-length entropy estimate in bits/symbol:
//   E = n * log2(n) / sum_i Lambda_i
// where Lambda_i is the length of the shortest substring starting at i that
// does not occur entirely within positions 0..i-1 (capped at n - i, with
// Lambda_0 = 1, all 0-based). Clamped to [0, log2 n]. OpenMP over positions.
EntropyEstimate lz_entropy(std::span<const int> symbols);
EntropyEstimate lz_entropy_serial(std::span<const int> symbols);

// Shannon entropy of the empirical distribution over all contiguous
// subsequences of length 1..max_len. Exhaustive; refuses n > 64.
EntropyEstimate literal_eq1_entropy(std::span<const int> symbols, int max_len);

// Largest pi in [1/L, 1] with  E = H(pi) + (1 - pi) * log2(L - 1),
// solved by bisection to 1e-9. E above log2(L) is clamped down first.
double fano_max_predictability(double entropy_bits, int num_locations);

MobilityProfile build_profile(const DailyLocationSequence& daily);

std::string profiles_to_json(const std::vector<MobilityProfile>& profiles);

} // namespace mobifair
