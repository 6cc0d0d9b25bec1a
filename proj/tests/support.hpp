#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace testing_support {

// Test streams come from the standard library generator so they share
// nothing with the library's own RNG.
inline std::vector<int> bernoulli_stream(std::mt19937_64& gen, std::size_t n, double p) {
    std::bernoulli_distribution bit(p);
    std::vector<int> xs(n);
    for (auto& x : xs) {
        x = bit(gen) ? 1 : 0;
    }
    return xs;
}

// Bernoulli stream whose rate switches at `change`.
inline std::vector<int> switching_stream(std::mt19937_64& gen, std::size_t n, std::size_t change, double before,
                                         double after) {
    std::vector<int> xs(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::bernoulli_distribution bit(i < change ? before : after);
        xs[i] = bit(gen) ? 1 : 0;
    }
    return xs;
}

inline std::vector<double> normal_stream(std::mt19937_64& gen, std::size_t n, double mean = 0.0, double sd = 1.0) {
    std::normal_distribution<double> dist(mean, sd);
    std::vector<double> ys(n);
    for (auto& y : ys) {
        y = dist(gen);
    }
    return ys;
}

}  // namespace testing_support
