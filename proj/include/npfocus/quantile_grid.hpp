#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"

namespace npfocus {

inline constexpr int kGridSchemaVersion = 1;

/// Probability levels and the matching data-scale thresholds.
struct QuantileGrid {
    std::vector<double> probs;
    std::vector<double> values;
    std::size_t training_n = 0;

    std::size_t size() const { return probs.size(); }

    friend bool operator==(const QuantileGrid&, const QuantileGrid&) = default;
};

/// Geometrically spaced probability levels: for m = 1..M,
/// 1 / (1 + (2n - 1) exp(-(2m - 1)/M * log(2n - 1))).
/// The levels crowd towards both tails; n is the training length.
inline std::vector<double> geometric_probabilities(std::size_t quantiles, std::size_t training_n) {
    if (quantiles == 0 || training_n == 0) {
        throw invalid_input("geometric_probabilities needs M >= 1 and n >= 1");
    }
    const double spread = 2.0 * static_cast<double>(training_n) - 1.0;
    const double log_spread = std::log(spread);
    std::vector<double> out(quantiles);
    for (std::size_t m = 1; m <= quantiles; ++m) {
        const double exponent = (2.0 * static_cast<double>(m) - 1.0) / static_cast<double>(quantiles);
        out[m - 1] = 1.0 / (1.0 + spread * std::exp(-exponent * log_spread));
    }
    return out;
}

/// Nearest-rank empirical quantiles: values[m] is the k-th order statistic of
/// `training` with k = ceil(probs[m] * len), clamped to [1, len].
inline QuantileGrid fit_quantiles(std::span<const double> training, std::span<const double> probs) {
    if (training.empty()) {
        throw invalid_input("cannot fit quantiles on an empty training set");
    }
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (!(probs[i] > 0.0 && probs[i] < 1.0)) {
            throw invalid_input("quantile probabilities must lie inside (0, 1)");
        }
        if (i > 0 && probs[i] < probs[i - 1]) {
            throw invalid_input("quantile probabilities must be sorted");
        }
    }
    std::vector<double> sorted(training.begin(), training.end());
    if (std::any_of(sorted.begin(), sorted.end(), [](double v) { return std::isnan(v); })) {
        throw invalid_input("training data contains NaN");
    }
    std::sort(sorted.begin(), sorted.end());

    QuantileGrid grid;
    grid.probs.assign(probs.begin(), probs.end());
    grid.training_n = sorted.size();
    grid.values.reserve(probs.size());
    const auto len = static_cast<double>(sorted.size());
    for (double p : probs) {
        auto k = static_cast<std::size_t>(std::ceil(p * len));
        k = std::clamp<std::size_t>(k, 1, sorted.size());
        grid.values.push_back(sorted[k - 1]);
    }
    return grid;
}

/// Fit M geometric levels on `training`.
inline QuantileGrid fit_grid(std::span<const double> training, std::size_t quantiles) {
    if (training.empty()) {
        throw invalid_input("cannot fit quantiles on an empty training set");
    }
    const auto probs = geometric_probabilities(quantiles, training.size());
    return fit_quantiles(training, probs);
}

inline void to_json(nlohmann::json& j, const QuantileGrid& g) {
    j = nlohmann::json{{"schema_version", kGridSchemaVersion},
                       {"probs", g.probs},
                       {"values", g.values},
                       {"training_n", g.training_n}};
}

inline void from_json(const nlohmann::json& j, QuantileGrid& g) {
    try {
        if (j.at("schema_version").get<int>() != kGridSchemaVersion) {
            throw invalid_input("unsupported grid schema_version");
        }
        g.probs = j.at("probs").get<std::vector<double>>();
        g.values = j.at("values").get<std::vector<double>>();
        g.training_n = j.at("training_n").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw invalid_input(std::string("malformed grid JSON: ") + e.what());
    }
    if (g.probs.size() != g.values.size() || g.probs.empty()) {
        throw invalid_input("grid probs and values must be non-empty and equally long");
    }
    for (std::size_t i = 0; i < g.probs.size(); ++i) {
        if (!(g.probs[i] > 0.0 && g.probs[i] < 1.0)) {
            throw invalid_input("grid probabilities must lie inside (0, 1)");
        }
        if (i > 0 && (g.probs[i] < g.probs[i - 1] || g.values[i] < g.values[i - 1])) {
            throw invalid_input("grid must be sorted");
        }
    }
}

}  // namespace npfocus
