#pragma once

// Test-side oracles, independent of the library implementations they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace testutil {

// Adjusted Rand Index between two labelings of the same points.
inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    const std::size_t n = a.size();
    std::map<std::pair<int, int>, std::int64_t> joint;
    std::map<int, std::int64_t> row, col;
    for (std::size_t i = 0; i < n; ++i) {
        ++joint[{a[i], b[i]}];
        ++row[a[i]];
        ++col[b[i]];
    }
    auto choose2 = [](std::int64_t x) { return static_cast<double>(x) * (x - 1) / 2.0; };
    double sum_joint = 0.0, sum_row = 0.0, sum_col = 0.0;
    for (const auto& [k, v] : joint) sum_joint += choose2(v);
    for (const auto& [k, v] : row) sum_row += choose2(v);
    for (const auto& [k, v] : col) sum_col += choose2(v);
    const double total = choose2(static_cast<std::int64_t>(n));
    const double expected = sum_row * sum_col / total;
    const double max_index = 0.5 * (sum_row + sum_col);
    if (max_index == expected) return 1.0; // both labelings degenerate
    return (sum_joint - expected) / (max_index - expected);
}

// Spearman rank correlation; average ranks for ties.
inline std::vector<double> ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    const auto rx = ranks(x), ry = ranks(y);
    const std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

} // namespace testutil
