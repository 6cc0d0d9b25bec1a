#pragma once

// Counter-based pseudo-random numbers.
//
// Draw i of a stream with key k is splitmix64(k + (i + 1) * 0x9E3779B97F4A7C15),
// so any draw is addressable without replaying the stream and independent
// streams are obtained by deriving new keys. Variates use fixed transforms
// (Box-Muller normals, tangent Cauchy, inversion Poisson) so sequences are
// reproducible across platforms and languages.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace npfocus {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Key for sub-stream `index` of a parent seed.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

class CounterRng {
  public:
    using result_type = std::uint64_t;
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

    explicit CounterRng(std::uint64_t key) : key_(key) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        ++counter_;
        return splitmix64(key_ + counter_ * kGolden);
    }

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

    /// Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

    /// Standard normal (Box-Muller; the second variate of each pair is cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(angle);
        has_spare_ = true;
        return r * std::cos(angle);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    double cauchy(double location, double scale) {
        return location + scale * std::tan(std::numbers::pi * (uniform() - 0.5));
    }

    /// Student-t with integer degrees of freedom: Z / sqrt(chi2_df / df).
    double student_t(int df) {
        const double z = normal();
        double chi2 = 0.0;
        for (int i = 0; i < df; ++i) {
            const double w = normal();
            chi2 += w * w;
        }
        return z / std::sqrt(chi2 / static_cast<double>(df));
    }

    /// Poisson by sequential inversion of the CDF.
    std::int64_t poisson(double mean) {
        const double u = uniform();
        double p = std::exp(-mean);
        double cdf = p;
        std::int64_t k = 0;
        while (u > cdf && p > 0.0) {
            ++k;
            p *= mean / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform index in [0, n).
    std::uint64_t index(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace npfocus
