#pragma once

// Slow reference computations. Everything here is O(n) or worse per call and
// intentionally shares no code path with the streaming detector.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace npfocus::oracle {

struct OracleResult {
    double stat = 0.0;
    std::optional<std::int64_t> argmax_tau;
    std::vector<std::pair<std::int64_t, double>> per_tau;
};

namespace detail {

// Twice the log-likelihood ratio of `ones` successes in `total` trials at
// rate `rate` against rate `base`.
inline double llr(std::int64_t ones, std::int64_t total, double rate, double base) {
    const double s = static_cast<double>(ones);
    const double f = static_cast<double>(total - ones);
    double out = 0.0;
    if (ones > 0) {
        out += s * std::log(rate / base);
    }
    if (total - ones > 0) {
        out += f * std::log((1.0 - rate) / (1.0 - base));
    }
    return 2.0 * out;
}

inline double max_loglik(std::int64_t ones, std::int64_t total) {
    if (total == 0) {
        return 0.0;
    }
    const double p = static_cast<double>(ones) / static_cast<double>(total);
    double out = 0.0;
    if (ones > 0) {
        out += static_cast<double>(ones) * std::log(p);
    }
    if (total - ones > 0) {
        out += static_cast<double>(total - ones) * std::log(1.0 - p);
    }
    return out;
}

inline void finish(OracleResult& r) {
    for (const auto& [tau, value] : r.per_tau) {
        if (!r.argmax_tau || value >= r.stat) {
            r.stat = value;
            r.argmax_tau = tau;
        }
    }
}

}  // namespace detail

/// Brute-force two-sided GLR statistic with known pre-change rate.
inline OracleResult glr_oracle(std::span<const int> xs, double theta0) {
    if (!(theta0 > 0.0 && theta0 < 1.0)) {
        throw invalid_input("theta0 must lie strictly inside (0, 1)");
    }
    const auto n = static_cast<std::int64_t>(xs.size());
    OracleResult r;
    std::int64_t suffix = 0;
    std::vector<std::pair<std::int64_t, double>> rev;
    for (std::int64_t tau = n - 1; tau >= 0; --tau) {
        suffix += xs[static_cast<std::size_t>(tau)] != 0 ? 1 : 0;
        const std::int64_t m = n - tau;
        const double rate = static_cast<double>(suffix) / static_cast<double>(m);
        const double up = detail::llr(suffix, m, std::max(theta0, rate), theta0);
        const double down = detail::llr(suffix, m, std::min(theta0, rate), theta0);
        rev.emplace_back(tau, std::max(up, down));
    }
    r.per_tau.assign(rev.rbegin(), rev.rend());
    detail::finish(r);
    return r;
}

/// Brute-force GLR statistic when both the pre- and post-change rates are
/// unknown; splits are taken over tau = 1..n-1.
inline OracleResult glr_oracle_unknown(std::span<const int> xs) {
    const auto n = static_cast<std::int64_t>(xs.size());
    OracleResult r;
    if (n < 2) {
        return r;
    }
    std::int64_t total = 0;
    for (int x : xs) {
        total += x != 0 ? 1 : 0;
    }
    const double full = detail::max_loglik(total, n);
    std::int64_t prefix = 0;
    for (std::int64_t tau = 1; tau < n; ++tau) {
        prefix += xs[static_cast<std::size_t>(tau - 1)] != 0 ? 1 : 0;
        const double split = detail::max_loglik(prefix, tau) + detail::max_loglik(total - prefix, n - tau);
        r.per_tau.emplace_back(tau, 2.0 * (split - full));
    }
    detail::finish(r);
    return r;
}

/// Extreme points of the greatest convex minorant of the partial-sum path
/// (0, S_1, ..., S_n). Gift-wrapping scan: from each vertex, jump to the
/// farthest point achieving the minimum slope.
inline std::vector<std::int64_t> convex_minorant_oracle(std::span<const int> xs) {
    const auto n = static_cast<std::int64_t>(xs.size());
    std::vector<std::int64_t> sums(static_cast<std::size_t>(n) + 1, 0);
    for (std::int64_t t = 0; t < n; ++t) {
        sums[static_cast<std::size_t>(t) + 1] = sums[static_cast<std::size_t>(t)] + (xs[static_cast<std::size_t>(t)] != 0 ? 1 : 0);
    }
    std::vector<std::int64_t> vertices{0};
    std::int64_t v = 0;
    while (v < n) {
        std::int64_t best = v + 1;
        for (std::int64_t j = v + 2; j <= n; ++j) {
            // slope(v, j) <= slope(v, best), cross-multiplied.
            const std::int64_t lhs = (sums[static_cast<std::size_t>(j)] - sums[static_cast<std::size_t>(v)]) * (best - v);
            const std::int64_t rhs = (sums[static_cast<std::size_t>(best)] - sums[static_cast<std::size_t>(v)]) * (j - v);
            if (lhs <= rhs) {
                best = j;
            }
        }
        vertices.push_back(best);
        v = best;
    }
    return vertices;
}

/// Candidate times a functionally pruned side must retain after `xs`: minorant
/// vertices (excluding the endpoint n) whose outgoing hull edge is steeper than
/// `baseline`. For a down side pass the complemented stream and 1 - theta0.
inline std::vector<std::int64_t> minorant_survivors(std::span<const int> xs, double baseline) {
    const auto vertices = convex_minorant_oracle(xs);
    std::vector<std::int64_t> sums(xs.size() + 1, 0);
    for (std::size_t t = 0; t < xs.size(); ++t) {
        sums[t + 1] = sums[t] + (xs[t] != 0 ? 1 : 0);
    }
    std::vector<std::int64_t> out;
    for (std::size_t i = 0; i + 1 < vertices.size(); ++i) {
        const std::int64_t from = vertices[i];
        const std::int64_t to = vertices[i + 1];
        const double slope = static_cast<double>(sums[static_cast<std::size_t>(to)] - sums[static_cast<std::size_t>(from)]) /
                             static_cast<double>(to - from);
        if (slope > baseline) {
            out.push_back(from);
        }
    }
    return out;
}

}  // namespace npfocus::oracle
