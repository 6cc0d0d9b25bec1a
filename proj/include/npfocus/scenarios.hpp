#pragma once

// Seeded generators for the six benchmark change scenarios. Observations are
// indexed t = 1..n; y_1..y_tau follow the pre-change law.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "random.hpp"

namespace npfocus {

/// Cauchy change in scale.
struct CauchyScale {
    double location = 0.0;
    double scale_pre = 1.0;
    double scale_post = 5.0;
};

/// Gaussian change in mean.
struct GaussMean {
    double mean_pre = 0.0;
    double mean_post = 1.0;
    double sd = 1.0;
};

/// Two-component Gaussian mixture; `alpha` is the weight of the low mode.
struct Multimodal {
    double low = 0.0;
    double high = 10.0;
    double sd = 1.0;
    double alpha_pre = 2.0 / 3.0;
    double alpha_post = 1.0 / 3.0;
};

/// Discrete Ornstein-Uhlenbeck process plus white noise, with a level term
/// f_t switching from 0 to `shift` after the change:
///   nu_t = nu_{t-1} - theta f_{t-1} - theta nu_{t-1} + sigma_nu w_{t-1},
///   y_t = nu_t + eps_t.
struct OrnsteinUhlenbeck {
    double theta = 0.1;
    double shift = -10.0;
    double sigma_nu = 1.0;
    double sigma_eps = 1.0;
};

/// Sinusoidal mean sin(pi f t) with unit noise; after the change the mean
/// decays as amplitude * sin(pi f t) * exp(-decay (t - tau)).
struct Sinusoidal {
    double frequency = 0.2;
    double decay = 0.005;
    double amplitude = 1.0;
    double noise_sd = 1.0;
};

/// Student-t noise; after the change each observation independently receives,
/// with probability `fraction`, an added Poisson(`poisson_mean`) jump.
struct HeavyTails {
    int df = 5;
    double fraction = 0.2;
    double poisson_mean = 10.0;
};

using ScenarioKind = std::variant<CauchyScale, GaussMean, Multimodal, OrnsteinUhlenbeck, Sinusoidal, HeavyTails>;

struct ScenarioSpec {
    ScenarioKind kind = GaussMean{};
    std::size_t n = 0;
    std::size_t tau = 0;
    std::uint64_t seed = 0;
};

inline std::string scenario_name(const ScenarioKind& kind) {
    return std::visit(
        [](const auto& s) -> std::string {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CauchyScale>) return "cauchy";
            else if constexpr (std::is_same_v<T, GaussMean>) return "gauss";
            else if constexpr (std::is_same_v<T, Multimodal>) return "multim";
            else if constexpr (std::is_same_v<T, OrnsteinUhlenbeck>) return "ou";
            else if constexpr (std::is_same_v<T, Sinusoidal>) return "sinusoidal";
            else return "tails";
        },
        kind);
}

inline ScenarioKind scenario_kind(std::string_view name) {
    if (name == "cauchy") return CauchyScale{};
    if (name == "gauss") return GaussMean{};
    if (name == "multim") return Multimodal{};
    if (name == "ou" || name == "OUmean") return OrnsteinUhlenbeck{};
    if (name == "sinusoidal") return Sinusoidal{};
    if (name == "tails") return HeavyTails{};
    throw invalid_input("unknown scenario '" + std::string(name) +
                        "' (expected cauchy, gauss, multim, ou, sinusoidal or tails)");
}

inline ScenarioSpec make_scenario(std::string_view name, std::size_t n, std::size_t tau, std::uint64_t seed) {
    return ScenarioSpec{scenario_kind(name), n, tau, seed};
}

inline void validate(const ScenarioSpec& spec) {
    if (spec.tau > spec.n) {
        throw invalid_input("scenario changepoint tau must not exceed n");
    }
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw invalid_input(std::string(what) + " must be positive and finite");
        }
    };
    auto probability = [](double v, const char* what) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw invalid_input(std::string(what) + " must lie in [0, 1]");
        }
    };
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CauchyScale>) {
                positive(s.scale_pre, "cauchy scale_pre");
                positive(s.scale_post, "cauchy scale_post");
            } else if constexpr (std::is_same_v<T, GaussMean>) {
                positive(s.sd, "gauss sd");
            } else if constexpr (std::is_same_v<T, Multimodal>) {
                positive(s.sd, "multim sd");
                probability(s.alpha_pre, "multim alpha_pre");
                probability(s.alpha_post, "multim alpha_post");
            } else if constexpr (std::is_same_v<T, OrnsteinUhlenbeck>) {
                positive(s.sigma_nu, "ou sigma_nu");
                positive(s.sigma_eps, "ou sigma_eps");
                if (!(s.theta > 0.0 && s.theta < 2.0)) {
                    throw invalid_input("ou theta must lie in (0, 2)");
                }
            } else if constexpr (std::is_same_v<T, Sinusoidal>) {
                positive(s.noise_sd, "sinusoidal noise_sd");
                if (!(s.decay >= 0.0)) {
                    throw invalid_input("sinusoidal decay must be non-negative");
                }
            } else {
                if (s.df < 1) {
                    throw invalid_input("tails df must be at least 1");
                }
                probability(s.fraction, "tails fraction");
                positive(s.poisson_mean, "tails poisson_mean");
            }
        },
        spec.kind);
}

/// Draw the scenario's series of length n.
inline std::vector<double> generate(const ScenarioSpec& spec) {
    validate(spec);
    CounterRng rng(spec.seed);
    std::vector<double> y;
    y.reserve(spec.n);
    const auto tau = spec.tau;

    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            for (std::size_t t = 1; t <= spec.n; ++t) {
                const bool post = t > tau;
                if constexpr (std::is_same_v<T, CauchyScale>) {
                    y.push_back(rng.cauchy(s.location, post ? s.scale_post : s.scale_pre));
                } else if constexpr (std::is_same_v<T, GaussMean>) {
                    y.push_back(rng.normal(post ? s.mean_post : s.mean_pre, s.sd));
                } else if constexpr (std::is_same_v<T, Multimodal>) {
                    const double alpha = post ? s.alpha_post : s.alpha_pre;
                    const bool low = rng.bernoulli(alpha);
                    y.push_back(rng.normal(low ? s.low : s.high, s.sd));
                } else if constexpr (std::is_same_v<T, Sinusoidal>) {
                    const double td = static_cast<double>(t);
                    double mean = std::sin(std::numbers::pi * s.frequency * td);
                    if (post) {
                        mean *= s.amplitude * std::exp(-s.decay * static_cast<double>(t - tau));
                    }
                    y.push_back(rng.normal(mean, s.noise_sd));
                } else if constexpr (std::is_same_v<T, HeavyTails>) {
                    double v = rng.student_t(s.df);
                    if (post && rng.bernoulli(s.fraction)) {
                        v += static_cast<double>(rng.poisson(s.poisson_mean));
                    }
                    y.push_back(v);
                }
            }
            if constexpr (std::is_same_v<T, OrnsteinUhlenbeck>) {
                // nu_0 = 0 and f_0 = 0; f_t applies from t = tau + 1.
                double nu = 0.0;
                double f_prev = 0.0;
                double w_prev = rng.normal();
                for (std::size_t t = 1; t <= spec.n; ++t) {
                    nu = nu - s.theta * f_prev - s.theta * nu + s.sigma_nu * w_prev;
                    y.push_back(nu + rng.normal(0.0, s.sigma_eps));
                    f_prev = t > tau ? s.shift : 0.0;
                    w_prev = rng.normal();
                }
            }
        },
        spec.kind);
    return y;
}

// --- JSON -------------------------------------------------------------------

inline nlohmann::json scenario_params(const ScenarioKind& kind) {
    return std::visit(
        [](const auto& s) -> nlohmann::json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CauchyScale>) {
                return {{"location", s.location}, {"scale_pre", s.scale_pre}, {"scale_post", s.scale_post}};
            } else if constexpr (std::is_same_v<T, GaussMean>) {
                return {{"mean_pre", s.mean_pre}, {"mean_post", s.mean_post}, {"sd", s.sd}};
            } else if constexpr (std::is_same_v<T, Multimodal>) {
                return {{"low", s.low}, {"high", s.high}, {"sd", s.sd}, {"alpha_pre", s.alpha_pre},
                        {"alpha_post", s.alpha_post}};
            } else if constexpr (std::is_same_v<T, OrnsteinUhlenbeck>) {
                return {{"theta", s.theta}, {"shift", s.shift}, {"sigma_nu", s.sigma_nu},
                        {"sigma_eps", s.sigma_eps}};
            } else if constexpr (std::is_same_v<T, Sinusoidal>) {
                return {{"frequency", s.frequency}, {"decay", s.decay}, {"amplitude", s.amplitude},
                        {"noise_sd", s.noise_sd}};
            } else {
                return {{"df", s.df}, {"fraction", s.fraction}, {"poisson_mean", s.poisson_mean}};
            }
        },
        kind);
}

/// Override scenario parameters from a JSON object of the same shape as
/// `scenario_params`; unknown keys are rejected.
inline void apply_scenario_params(ScenarioKind& kind, const nlohmann::json& params) {
    const nlohmann::json current = scenario_params(kind);
    for (const auto& [key, value] : params.items()) {
        if (!current.contains(key)) {
            throw invalid_input("unknown parameter '" + key + "' for scenario " + scenario_name(kind));
        }
    }
    auto get = [&](const char* key, auto& field) {
        if (params.contains(key)) {
            field = params.at(key).get<std::decay_t<decltype(field)>>();
        }
    };
    std::visit(
        [&](auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CauchyScale>) {
                get("location", s.location); get("scale_pre", s.scale_pre); get("scale_post", s.scale_post);
            } else if constexpr (std::is_same_v<T, GaussMean>) {
                get("mean_pre", s.mean_pre); get("mean_post", s.mean_post); get("sd", s.sd);
            } else if constexpr (std::is_same_v<T, Multimodal>) {
                get("low", s.low); get("high", s.high); get("sd", s.sd);
                get("alpha_pre", s.alpha_pre); get("alpha_post", s.alpha_post);
            } else if constexpr (std::is_same_v<T, OrnsteinUhlenbeck>) {
                get("theta", s.theta); get("shift", s.shift); get("sigma_nu", s.sigma_nu);
                get("sigma_eps", s.sigma_eps);
            } else if constexpr (std::is_same_v<T, Sinusoidal>) {
                get("frequency", s.frequency); get("decay", s.decay); get("amplitude", s.amplitude);
                get("noise_sd", s.noise_sd);
            } else {
                get("df", s.df); get("fraction", s.fraction); get("poisson_mean", s.poisson_mean);
            }
        },
        kind);
}

inline void to_json(nlohmann::json& j, const ScenarioSpec& spec) {
    j = nlohmann::json{{"scenario", scenario_name(spec.kind)},
                       {"params", scenario_params(spec.kind)},
                       {"n", spec.n},
                       {"tau", spec.tau},
                       {"seed", spec.seed}};
}

inline void from_json(const nlohmann::json& j, ScenarioSpec& spec) {
    try {
        spec.kind = scenario_kind(j.at("scenario").get<std::string>());
        if (j.contains("params")) {
            apply_scenario_params(spec.kind, j.at("params"));
        }
        spec.n = j.at("n").get<std::size_t>();
        spec.tau = j.value("tau", spec.n);
        spec.seed = j.value("seed", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw invalid_input(std::string("malformed scenario JSON: ") + e.what());
    }
    validate(spec);
}

}  // namespace npfocus
