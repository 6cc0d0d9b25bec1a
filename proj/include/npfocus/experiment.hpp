#pragma once

// Detection-delay / false-positive experiments over simulated scenarios.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "calibration.hpp"
#include "errors.hpp"
#include "np_focus.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "scenarios.hpp"

namespace npfocus {

struct ExperimentConfig {
    ScenarioSpec scenario;
    std::size_t replicates = 100;
    std::size_t target_arl = 10000;
    std::size_t probation = 100;
    std::size_t quantiles = 15;
    Mode mode = Mode::known_theta0;
    std::uint64_t seed = 0;
    std::size_t calibration_replicates = 200;
    /// Skip calibration and use these.
    std::optional<Thresholds> thresholds;
};

inline void validate(const ExperimentConfig& cfg) {
    validate(cfg.scenario);
    if (cfg.replicates < 1) {
        throw invalid_input("replicates must be at least 1");
    }
    if (cfg.quantiles < 1) {
        throw invalid_input("at least one quantile is required");
    }
    if (cfg.probation < 2 || cfg.probation >= cfg.scenario.tau) {
        throw invalid_input("probation must be at least 2 and shorter than tau");
    }
    if (!cfg.thresholds && cfg.target_arl < 1) {
        throw invalid_input("target ARL must be positive");
    }
    if (cfg.thresholds) {
        validate(*cfg.thresholds);
    }
}

struct ReplicateRecord {
    std::size_t replicate = 0;
    std::uint64_t seed = 0;
    std::optional<std::int64_t> detection_time;
    std::optional<std::int64_t> tau_hat;
    std::optional<Trigger> trigger;

    bool false_positive(std::size_t tau) const {
        return detection_time && *detection_time <= static_cast<std::int64_t>(tau);
    }
    std::optional<std::int64_t> delay(std::size_t tau) const {
        if (!detection_time || false_positive(tau)) {
            return std::nullopt;
        }
        return *detection_time - static_cast<std::int64_t>(tau);
    }
};

struct CurvePoint {
    std::int64_t t = 0;
    double detected = 0.0;
};

struct ExperimentReport {
    std::string scenario;
    std::size_t n = 0;
    std::size_t tau = 0;
    std::size_t quantiles = 0;
    Thresholds thresholds;
    /// Mean delay over detections after the change; empty if there were none.
    std::optional<double> avg_delay;
    double delay_sd = 0.0;
    std::size_t true_detections = 0;
    std::size_t false_positives = 0;
    /// Replicates with no detection by the end of the stream.
    std::size_t censored = 0;
    double fpr = 0.0;
    std::vector<CurvePoint> detection_curve;
    std::vector<ReplicateRecord> records;

    /// Delay formatted for tables; "> n-tau" when nothing was detected in time.
    std::string delay_display() const {
        if (!avg_delay) {
            return "> " + std::to_string(n - tau);
        }
        std::ostringstream os;
        os.setf(std::ios::fixed);
        os.precision(2);
        os << *avg_delay;
        return os.str();
    }

    /// Standard error of the mean delay.
    double delay_se() const {
        return true_detections > 1 ? delay_sd / std::sqrt(static_cast<double>(true_detections)) : 0.0;
    }
};

/// Sub-stream keys: 0 for calibration, 1 for the monitored replicates.
inline std::uint64_t calibration_seed(std::uint64_t seed) { return derive_seed(seed, 0); }
inline std::uint64_t replicate_seed(std::uint64_t seed, std::size_t r) { return derive_seed(derive_seed(seed, 1), r); }

/// Thresholds for the configuration: the given ones, or a fresh calibration on
/// the scenario's pre-change law with a per-replicate probation grid.
inline Thresholds experiment_thresholds(const ExperimentConfig& cfg) {
    if (cfg.thresholds) {
        return *cfg.thresholds;
    }
    ScenarioSpec null_spec = cfg.scenario;
    null_spec.seed = calibration_seed(cfg.seed);
    return calibrate(pre_change_sampler(null_spec), ProbationGrid{cfg.probation, cfg.quantiles}, cfg.target_arl,
                     cfg.calibration_replicates, cfg.mode);
}

inline ReplicateRecord run_replicate(const ExperimentConfig& cfg, const Thresholds& thresholds, std::size_t r) {
    ReplicateRecord rec;
    rec.replicate = r;
    rec.seed = replicate_seed(cfg.seed, r);
    ScenarioSpec spec = cfg.scenario;
    spec.seed = rec.seed;
    const auto ys = generate(spec);

    NpFocusConfig config;
    config.quantiles = cfg.quantiles;
    config.probation = cfg.probation;
    config.mode = cfg.mode;
    config.thresholds = thresholds;
    NpFocus detector(config);
    for (double y : ys) {
        const auto step = detector.step(y);
        if (step.event) {
            rec.detection_time = step.event->time;
            rec.tau_hat = step.event->tau_hat;
            rec.trigger = step.event->trigger;
            break;
        }
    }
    return rec;
}

inline ExperimentReport summarize(const ExperimentConfig& cfg, Thresholds thresholds,
                                  std::vector<ReplicateRecord> records) {
    ExperimentReport rep;
    rep.scenario = scenario_name(cfg.scenario.kind);
    rep.n = cfg.scenario.n;
    rep.tau = cfg.scenario.tau;
    rep.quantiles = cfg.quantiles;
    rep.thresholds = std::move(thresholds);
    rep.records = std::move(records);

    const std::size_t horizon = rep.n - rep.tau;
    std::vector<std::size_t> hits(horizon + 1, 0);
    double total = 0.0;
    double total_sq = 0.0;
    for (const auto& rec : rep.records) {
        if (!rec.detection_time) {
            ++rep.censored;
        } else if (rec.false_positive(rep.tau)) {
            ++rep.false_positives;
        } else {
            const auto d = *rec.delay(rep.tau);
            ++rep.true_detections;
            total += static_cast<double>(d);
            total_sq += static_cast<double>(d) * static_cast<double>(d);
            ++hits[static_cast<std::size_t>(d)];
        }
    }
    const auto count = static_cast<double>(rep.records.size());
    rep.fpr = static_cast<double>(rep.false_positives) / count;
    if (rep.true_detections > 0) {
        const auto k = static_cast<double>(rep.true_detections);
        rep.avg_delay = total / k;
        if (rep.true_detections > 1) {
            rep.delay_sd = std::sqrt(std::max(0.0, (total_sq - k * *rep.avg_delay * *rep.avg_delay) / (k - 1.0)));
        }
    }
    std::size_t running = 0;
    rep.detection_curve.reserve(horizon + 1);
    for (std::size_t t = 0; t <= horizon; ++t) {
        running += hits[t];
        rep.detection_curve.push_back({static_cast<std::int64_t>(t), static_cast<double>(running) / count});
    }
    return rep;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    validate(cfg);
    Thresholds thresholds = experiment_thresholds(cfg);
    std::vector<ReplicateRecord> records(cfg.replicates);
    parallel_for(cfg.replicates, [&](std::size_t r) { records[r] = run_replicate(cfg, thresholds, r); });
    return summarize(cfg, std::move(thresholds), std::move(records));
}

struct ElbowPoint {
    std::size_t quantiles = 0;
    ExperimentReport report;
};

/// run_experiment repeated over grid sizes; each size is calibrated on its own.
inline std::vector<ElbowPoint> elbow_sweep(const ExperimentConfig& cfg, const std::vector<std::size_t>& sizes) {
    std::vector<ElbowPoint> out;
    for (std::size_t m : sizes) {
        ExperimentConfig c = cfg;
        c.quantiles = m;
        out.push_back({m, run_experiment(c)});
    }
    return out;
}

// --- output -----------------------------------------------------------------

inline nlohmann::json to_json(const ReplicateRecord& rec, std::size_t tau) {
    nlohmann::json j;
    j["replicate"] = rec.replicate;
    j["seed"] = rec.seed;
    j["detection_time"] = rec.detection_time ? nlohmann::json(*rec.detection_time) : nlohmann::json(nullptr);
    const auto d = rec.delay(tau);
    j["delay"] = d ? nlohmann::json(*d) : nlohmann::json(nullptr);
    j["false_positive"] = rec.false_positive(tau);
    j["tau_hat"] = rec.tau_hat ? nlohmann::json(*rec.tau_hat) : nlohmann::json(nullptr);
    j["trigger"] = rec.trigger ? nlohmann::json(to_string(*rec.trigger)) : nlohmann::json(nullptr);
    return j;
}

inline nlohmann::json to_json(const ExperimentReport& rep) {
    nlohmann::json j;
    j["scenario"] = rep.scenario;
    j["n"] = rep.n;
    j["tau"] = rep.tau;
    j["quantiles"] = rep.quantiles;
    j["replicates"] = rep.records.size();
    j["thresholds"] = rep.thresholds;
    j["avg_delay"] = rep.avg_delay ? nlohmann::json(*rep.avg_delay) : nlohmann::json(nullptr);
    j["delay_display"] = rep.delay_display();
    j["delay_sd"] = rep.delay_sd;
    j["true_detections"] = rep.true_detections;
    j["false_positives"] = rep.false_positives;
    j["censored"] = rep.censored;
    j["fpr"] = rep.fpr;
    auto curve = nlohmann::json::array();
    for (const auto& p : rep.detection_curve) {
        curve.push_back({p.t, p.detected});
    }
    j["detection_curve"] = std::move(curve);
    auto recs = nlohmann::json::array();
    for (const auto& rec : rep.records) {
        recs.push_back(to_json(rec, rep.tau));
    }
    j["records"] = std::move(recs);
    return j;
}

inline void write_curve_csv(std::ostream& os, const ExperimentReport& rep) {
    os << "t,detected\n";
    char buf[64];
    for (const auto& p : rep.detection_curve) {
        std::snprintf(buf, sizeof buf, "%lld,%.6f\n", static_cast<long long>(p.t), p.detected);
        os << buf;
    }
}

inline nlohmann::json to_json(const std::vector<ElbowPoint>& sweep) {
    auto arr = nlohmann::json::array();
    for (const auto& pt : sweep) {
        nlohmann::json j;
        j["quantiles"] = pt.quantiles;
        j["avg_delay"] = pt.report.avg_delay ? nlohmann::json(*pt.report.avg_delay) : nlohmann::json(nullptr);
        j["delay_se"] = pt.report.delay_se();
        j["fpr"] = pt.report.fpr;
        j["censored"] = pt.report.censored;
        arr.push_back(std::move(j));
    }
    return arr;
}

}  // namespace npfocus
