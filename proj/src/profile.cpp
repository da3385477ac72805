#include "mobifair/profile.hpp"
#include "mobifair/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>

namespace mobifair {

namespace {

// Shortest substring starting at i that is not contained in symbols[0..i-1],
// capped at the remaining length n - i.
std::int64_t match_length(std::span<const int> s, std::size_t i) {
    const std::size_t n = s.size();
    if (i == 0) return 1;
    const std::size_t cap = n - i;
    std::size_t longest = 0;
    for (std::size_t j = 0; j < i; ++j) {
        const std::size_t t_max = std::min(i - j, cap);
        std::size_t t = 0;
        while (t < t_max && s[j + t] == s[i + t]) ++t;
        if (t > longest) {
            longest = t;
            if (longest == cap) break;
        }
    }
    return static_cast<std::int64_t>(std::min(longest + 1, cap));
}

EntropyEstimate lz_from_sum(std::size_t n, std::int64_t lambda_sum) {
    const double log2n = std::log2(static_cast<double>(n));
    double e = static_cast<double>(n) * log2n / static_cast<double>(lambda_sum);
    e = std::clamp(e, 0.0, log2n);
    return {e, EntropyMethod::lempel_ziv};
}

double entropy_of_counts(const std::map<std::vector<int>, std::int64_t>& counts,
                         std::int64_t total) {
    double h = 0.0;
    for (const auto& [sub, c] : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h;
}

} // namespace

const char* entropy_method_name(EntropyMethod m) {
    return m == EntropyMethod::lempel_ziv ? "lempel_ziv" : "literal_eq1";
}

int distinct_locations(const DailyLocationSequence& seq) {
    if (seq.days.empty()) throw data_error("distinct_locations: empty sequence");
    std::set<CellId> cells;
    for (const auto& [day, cell] : seq.days) cells.insert(cell);
    return static_cast<int>(cells.size());
}

EntropyEstimate lz_entropy(std::span<const int> symbols) {
    const std::size_t n = symbols.size();
    if (n < 2) throw data_error("lz_entropy: need at least 2 symbols");
    std::int64_t sum = 0;
#pragma omp parallel for reduction(+ : sum) schedule(dynamic, 64)
    for (std::size_t i = 0; i < n; ++i) sum += match_length(symbols, i);
    return lz_from_sum(n, sum);
}

EntropyEstimate lz_entropy_serial(std::span<const int> symbols) {
    const std::size_t n = symbols.size();
    if (n < 2) throw data_error("lz_entropy: need at least 2 symbols");
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < n; ++i) sum += match_length(symbols, i);
    return lz_from_sum(n, sum);
}

EntropyEstimate literal_eq1_entropy(std::span<const int> symbols, int max_len) {
    const std::size_t n = symbols.size();
    if (n > 64) throw data_error("literal_eq1_entropy: oracle only, n must be <= 64");
    if (n == 0 || max_len < 1 || static_cast<std::size_t>(max_len) > n)
        throw data_error("literal_eq1_entropy: need 1 <= max_len <= n");

    std::map<std::vector<int>, std::int64_t> counts;
    std::int64_t total = 0;
    for (int len = 1; len <= max_len; ++len) {
        for (std::size_t i = 0; i + len <= n; ++i) {
            counts[std::vector<int>(symbols.begin() + i, symbols.begin() + i + len)] += 1;
            ++total;
        }
    }
    return {entropy_of_counts(counts, total), EntropyMethod::literal_eq1};
}

double fano_max_predictability(double entropy_bits, int num_locations) {
    if (num_locations <= 0) throw data_error("fano: num_locations must be positive");
    if (entropy_bits < 0) throw data_error("fano: entropy must be non-negative");
    if (num_locations == 1) return 1.0;

    const double big_l = static_cast<double>(num_locations);
    const double log2_l1 = std::log2(big_l - 1.0);
    const double e = std::min(entropy_bits, std::log2(big_l));
    if (e <= 0.0) return 1.0;

    // rhs(pi) = H(pi) + (1 - pi) log2(L - 1), strictly decreasing on [1/L, 1]
    // from log2(L) down to 0.
    auto rhs = [&](double pi) {
        double h = 0.0;
        if (pi > 0.0 && pi < 1.0)
            h = -pi * std::log2(pi) - (1.0 - pi) * std::log2(1.0 - pi);
        return h + (1.0 - pi) * log2_l1;
    };

    double lo = 1.0 / big_l, hi = 1.0;
    while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        if (rhs(mid) > e)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

MobilityProfile build_profile(const DailyLocationSequence& daily) {
    if (daily.days.size() < 2) throw data_error("build_profile: need at least 2 daily entries");

    // entropy sees cell identity only; remap cells to dense symbols by first
    // appearance
    std::map<CellId, int> symbol_of;
    std::vector<int> symbols;
    symbols.reserve(daily.days.size());
    for (const auto& [day, cell] : daily.days) {
        auto [it, inserted] = symbol_of.try_emplace(cell, static_cast<int>(symbol_of.size()));
        symbols.push_back(it->second);
    }

    MobilityProfile p;
    p.user_id = daily.user_id;
    p.sequence_length = static_cast<int>(symbols.size());
    p.distinct_locations = static_cast<int>(symbol_of.size());
    p.entropy = lz_entropy(symbols);
    p.pi_max = fano_max_predictability(p.entropy.value_bits, p.distinct_locations);
    return p;
}

std::string profiles_to_json(const std::vector<MobilityProfile>& profiles) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : profiles) {
        arr.push_back({{"user_id", p.user_id},
                       {"entropy_bits", p.entropy.value_bits},
                       {"method", entropy_method_name(p.entropy.method)},
                       {"distinct_locations", p.distinct_locations},
                       {"pi_max", p.pi_max},
                       {"sequence_length", p.sequence_length}});
    }
    return arr.dump(2) + "\n";
}

} // namespace mobifair
