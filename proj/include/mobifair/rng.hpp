#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace mobifair::rng {

// All randomness in the pipeline flows from one master seed through named
// derivation, so every component draws from its own stream and reruns are
// reproducible regardless of evaluation order.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t derive(std::uint64_t master, std::string_view purpose) {
    return splitmix64(master ^ fnv1a64(purpose));
}

inline std::uint64_t derive(std::uint64_t master, std::string_view purpose, std::uint64_t a) {
    return splitmix64(derive(master, purpose) ^ a);
}

inline std::uint64_t derive(std::uint64_t master, std::string_view purpose, std::uint64_t a,
                            std::string_view b) {
    return splitmix64(derive(master, purpose, a) ^ fnv1a64(b));
}

// mt19937_64 output is fixed by the standard; the helpers below avoid
// std::uniform_*_distribution, whose sequences are implementation-defined.
class Engine {
public:
    explicit Engine(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Unbiased integer in [0, bound) by rejection.
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("Engine::below: bound must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t r = gen_();
        while (r >= limit) r = gen_();
        return r % bound;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // First k entries of a partial Fisher-Yates shuffle of 0..n-1.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
            std::size_t j = i + static_cast<std::size_t>(below(n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        return idx;
    }

private:
    std::mt19937_64 gen_;
};

} // namespace mobifair::rng
