// Copyright 2026 The phibench Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "phibench/error.hpp"
#include "phibench/rng.hpp"

namespace phibench {

namespace detail {

// Mid-ranks (1-based) of the pooled values.
inline std::vector<double> mid_ranks(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

// Number of arrangements giving each U in [0, m*n] for untied samples.
inline std::vector<double> u_distribution(std::size_t m, std::size_t n) {
    // f[i][j] holds the counts for sizes (i, j); built row by row.
    std::vector<std::vector<std::vector<double>>> f(m + 1, std::vector<std::vector<double>>(n + 1));
    for (std::size_t i = 0; i <= m; ++i) {
        for (std::size_t j = 0; j <= n; ++j) {
            auto& cur = f[i][j];
            cur.assign(i * j + 1, 0.0);
            if (i == 0 || j == 0) {
                cur[0] = 1.0;
                continue;
            }
            // The largest pooled value belongs to the first sample (beats all j) or to the second.
            const auto& a = f[i - 1][j];
            for (std::size_t u = 0; u < a.size(); ++u) cur[u + j] += a[u];
            const auto& b = f[i][j - 1];
            for (std::size_t u = 0; u < b.size(); ++u) cur[u] += b[u];
        }
    }
    return f[m][n];
}

constexpr double kUEpsilon = 1e-9;

inline double two_sided(double below, double above, double total) {
    return std::min(1.0, 2.0 * std::min(below, above) / total);
}

}  // namespace detail

/// Two-sided Mann-Whitney U test p-value.
///
/// Without ties the exact null distribution of U is used. With ties, U is
/// computed from mid-ranks and its permutation distribution is enumerated
/// over all splits of the pooled sample; when there are more than
/// `max_enumeration` splits, `monte_carlo_draws` random splits are used.
inline double significance_test(const std::vector<double>& a, const std::vector<double>& b,
                                std::uint64_t max_enumeration = 2'000'000, std::size_t monte_carlo_draws = 200'000) {
    if (a.empty() || b.empty()) throw ConfigError("significance test needs at least one value per sample");
    const std::size_t m = a.size(), n = b.size(), total = m + n;
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = detail::mid_ranks(pooled);

    const double offset = static_cast<double>(m) * static_cast<double>(m + 1) / 2.0;
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) rank_sum += ranks[i];
    const double u_obs = rank_sum - offset;

    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    const bool ties = std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();

    if (!ties && m * n <= 10'000) {
        const auto dist = detail::u_distribution(m, n);
        double below = 0.0, above = 0.0, all = 0.0;
        for (std::size_t u = 0; u < dist.size(); ++u) {
            const double uu = static_cast<double>(u);
            all += dist[u];
            if (uu <= u_obs + detail::kUEpsilon) below += dist[u];
            if (uu >= u_obs - detail::kUEpsilon) above += dist[u];
        }
        return detail::two_sided(below, above, all);
    }

    // Count splits of the pooled ranks whose first-sample U is at or beyond u_obs.
    double splits = 1.0;
    for (std::size_t k = 1; k <= m; ++k) splits = splits * static_cast<double>(total - m + k) / static_cast<double>(k);
    double below = 0.0, above = 0.0, count = 0.0;
    auto tally = [&](double u) {
        count += 1.0;
        if (u <= u_obs + detail::kUEpsilon) below += 1.0;
        if (u >= u_obs - detail::kUEpsilon) above += 1.0;
    };
    if (splits <= static_cast<double>(max_enumeration)) {
        std::vector<std::size_t> pick(m);
        std::iota(pick.begin(), pick.end(), 0);
        while (true) {
            double s = 0.0;
            for (auto i : pick) s += ranks[i];
            tally(s - offset);
            // Next m-combination of [0, total) in lexicographic order.
            std::size_t k = m;
            while (k > 0 && pick[k - 1] == total - m + k - 1) --k;
            if (k == 0) break;
            ++pick[k - 1];
            for (std::size_t i = k; i < m; ++i) pick[i] = pick[i - 1] + 1;
        }
    } else {
        Rng rng(derive_seed(0x6d616e6e77686974ULL, static_cast<std::uint64_t>(total)));
        std::vector<double> shuffled = ranks;
        tally(u_obs);
        for (std::size_t d = 1; d < monte_carlo_draws; ++d) {
            rng.shuffle(shuffled);
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) s += shuffled[i];
            tally(s - offset);
        }
    }
    return detail::two_sided(below, above, count);
}

}  // namespace phibench
