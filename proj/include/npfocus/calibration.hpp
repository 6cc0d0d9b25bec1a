#pragma once

// Monte-Carlo threshold calibration.
//
// T null sequences of length N are monitored with both triggers disabled and
// the per-sequence suprema of the sum and max statistics are recorded. Under
// an approximately exponential run length, a target average run length N
// means a fraction exp(-1) of null sequences should still be running at N.
// Each aggregate first gets its own threshold at that survival level; the two
// are then scaled by a common multiplier so that the composite (sum OR max)
// test has the same survival fraction.

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "np_focus.hpp"
#include "parallel.hpp"
#include "quantile_grid.hpp"
#include "random.hpp"
#include "scenarios.hpp"

namespace npfocus {

/// Pre-change law of a scenario, simulated directly.
struct SimulatedNull {
    ScenarioSpec spec;
};

/// Training observations resampled with replacement.
struct BootstrapNull {
    std::vector<double> training;
};

struct NullSampler {
    std::variant<SimulatedNull, BootstrapNull> source;
    std::uint64_t seed = 0;

    std::string method() const { return std::holds_alternative<SimulatedNull>(source) ? "simulate" : "bootstrap"; }

    /// Null sequence number `replicate`; depends only on (seed, replicate, length).
    std::vector<double> draw(std::uint64_t replicate, std::size_t length) const {
        const std::uint64_t key = derive_seed(seed, replicate);
        if (const auto* sim = std::get_if<SimulatedNull>(&source)) {
            ScenarioSpec spec = sim->spec;
            spec.n = length;
            spec.tau = length;
            spec.seed = key;
            return generate(spec);
        }
        const auto& training = std::get<BootstrapNull>(source).training;
        if (training.empty()) {
            throw invalid_input("bootstrap sampler needs training data");
        }
        CounterRng rng(key);
        std::vector<double> out(length);
        for (double& v : out) {
            v = training[rng.index(training.size())];
        }
        return out;
    }
};

/// Sampler for the scenario's pre-change law, seeded from the spec.
inline NullSampler pre_change_sampler(const ScenarioSpec& spec) {
    validate(spec);
    return NullSampler{SimulatedNull{spec}, spec.seed};
}

/// Each null sequence starts with its own probation period from which the
/// grid is fitted, exactly as a monitored stream would.
struct ProbationGrid {
    std::size_t probation = 100;
    std::size_t quantiles = 15;
};

using GridPolicy = std::variant<QuantileGrid, ProbationGrid>;

struct NullMaxima {
    double sum = 0.0;
    double max = 0.0;

    friend bool operator==(const NullMaxima&, const NullMaxima&) = default;
};

inline constexpr std::size_t kMinCalibrationReplicates = 20;

/// Suprema of the sum and max statistics over `replicates` null sequences of
/// `run_length` monitored observations each.
inline std::vector<NullMaxima> collect_null_maxima(const NullSampler& sampler, const GridPolicy& grid,
                                                   std::size_t run_length, std::size_t replicates, Mode mode) {
    if (replicates < kMinCalibrationReplicates) {
        throw invalid_input("calibration needs at least 20 replicates");
    }
    std::vector<NullMaxima> out(replicates);
    parallel_for(replicates, [&](std::size_t r) {
        NullMaxima best;
        auto consume = [&](NpFocus& detector, const std::vector<double>& ys) {
            for (double y : ys) {
                const auto step = detector.step(y);
                best.sum = std::max(best.sum, step.sum_stat);
                best.max = std::max(best.max, step.max_stat);
            }
        };
        if (const auto* fixed = std::get_if<QuantileGrid>(&grid)) {
            NpFocusConfig config;
            config.mode = mode;
            NpFocus detector(config, *fixed);
            consume(detector, sampler.draw(r, run_length));
        } else {
            const auto& policy = std::get<ProbationGrid>(grid);
            NpFocusConfig config;
            config.mode = mode;
            config.probation = policy.probation;
            config.quantiles = policy.quantiles;
            NpFocus detector(config);
            consume(detector, sampler.draw(r, policy.probation + run_length));
        }
        out[r] = best;
    });
    return out;
}

/// Level leaving round(exp(-1) * T) of `values` strictly below it: the
/// midpoint between the k-th and (k+1)-th order statistics. `degenerate` is
/// set when all values coincide, in which case the common value plus one
/// machine epsilon (relative) is returned.
inline double survival_level(std::vector<double> values, bool& degenerate) {
    std::sort(values.begin(), values.end());
    const std::size_t count = values.size();
    degenerate = values.front() == values.back();
    if (degenerate) {
        const double v = values.front();
        return v + DBL_EPSILON * std::max(1.0, std::abs(v));
    }
    auto k = static_cast<std::size_t>(std::lround(std::exp(-1.0) * static_cast<double>(count)));
    k = std::clamp<std::size_t>(k, 1, count - 1);
    const double lo = values[k - 1];
    const double hi = values[k];
    if (lo < hi) {
        return lo + 0.5 * (hi - lo);
    }
    // Ties straddle the target rank: pick whichever side of the tie block
    // lands closer to k survivors.
    const auto first = static_cast<std::size_t>(std::lower_bound(values.begin(), values.end(), lo) - values.begin());
    const auto last = static_cast<std::size_t>(std::upper_bound(values.begin(), values.end(), lo) - values.begin());
    if (k - first <= last - k && first > 0) {
        return values[first - 1] + 0.5 * (lo - values[first - 1]);
    }
    if (last < count) {
        return lo + 0.5 * (values[last] - lo);
    }
    return values[first - 1] + 0.5 * (lo - values[first - 1]);
}

/// Thresholds for `run_length` from precomputed null maxima.
inline Thresholds thresholds_from_maxima(const std::vector<NullMaxima>& maxima, std::size_t run_length) {
    if (maxima.size() < kMinCalibrationReplicates) {
        throw invalid_input("calibration needs at least 20 replicates");
    }
    std::vector<double> sums;
    std::vector<double> maxs;
    for (const auto& m : maxima) {
        sums.push_back(m.sum);
        maxs.push_back(m.max);
    }
    Thresholds th;
    bool degenerate_sum = false;
    bool degenerate_max = false;
    const double provisional_sum = survival_level(sums, degenerate_sum);
    const double provisional_max = survival_level(maxs, degenerate_max);
    if (degenerate_sum) {
        th.meta.warnings.push_back("all null sum maxima are equal; threshold set just above the common value");
    }
    if (degenerate_max) {
        th.meta.warnings.push_back("all null max maxima are equal; threshold set just above the common value");
    }

    // A sequence triggers the scaled composite test iff
    // max(sum / xi_sum, max / xi_max) >= multiplier.
    std::vector<double> ratios;
    ratios.reserve(maxima.size());
    for (const auto& m : maxima) {
        ratios.push_back(std::max(m.sum / provisional_sum, m.max / provisional_max));
    }
    bool degenerate_ratio = false;
    double multiplier = survival_level(ratios, degenerate_ratio);
    multiplier = std::max(1.0, multiplier);

    th.xi_sum = provisional_sum * multiplier;
    th.xi_max = provisional_max * multiplier;
    th.target_arl = run_length;
    th.meta.replicates = maxima.size();
    th.meta.run_length = run_length;
    th.meta.provisional_sum = provisional_sum;
    th.meta.provisional_max = provisional_max;
    th.meta.multiplier = multiplier;
    return th;
}

inline Thresholds calibrate(const NullSampler& sampler, const GridPolicy& grid, std::size_t run_length,
                            std::size_t replicates, Mode mode) {
    const auto maxima = collect_null_maxima(sampler, grid, run_length, replicates, mode);
    Thresholds th = thresholds_from_maxima(maxima, run_length);
    th.meta.seed = sampler.seed;
    th.meta.method = sampler.method();
    th.meta.mode = to_string(mode);
    return th;
}

}  // namespace npfocus
