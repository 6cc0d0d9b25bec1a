#pragma once

// Nonparametric detector: binarise each observation against a grid of
// empirical quantiles, run one Bernoulli FOCuS detector per level and
// aggregate the per-level statistics by sum and by max.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ber_focus.hpp"
#include "errors.hpp"
#include "quantile_grid.hpp"

namespace npfocus {

inline constexpr int kThresholdsSchemaVersion = 1;
inline constexpr int kSnapshotSchemaVersion = 1;

enum class Mode { known_theta0, unknown_theta0 };

inline std::string to_string(Mode mode) { return mode == Mode::known_theta0 ? "known" : "unknown"; }

inline Mode parse_mode(const std::string& s) {
    if (s == "known" || s == "known_theta0") {
        return Mode::known_theta0;
    }
    if (s == "unknown" || s == "unknown_theta0") {
        return Mode::unknown_theta0;
    }
    throw invalid_input("unknown mode '" + s + "' (expected known or unknown)");
}

/// Indicator 1{y <= p}.
inline bool binarize(double y, double p) {
    if (std::isnan(y)) {
        throw invalid_input("NaN observation in stream");
    }
    return y <= p;
}

struct CalibrationMeta {
    std::uint64_t seed = 0;
    std::size_t replicates = 0;
    std::size_t run_length = 0;
    std::string method = "manual";
    std::string mode;
    double provisional_sum = 0.0;
    double provisional_max = 0.0;
    double multiplier = 1.0;
    std::vector<std::string> warnings;

    friend bool operator==(const CalibrationMeta&, const CalibrationMeta&) = default;
};

/// Detection thresholds for the sum and max aggregates. Infinity disables a
/// trigger; it is serialized as JSON null.
struct Thresholds {
    double xi_sum = std::numeric_limits<double>::infinity();
    double xi_max = std::numeric_limits<double>::infinity();
    std::size_t target_arl = 0;
    CalibrationMeta meta;

    static Thresholds disabled() { return Thresholds{}; }

    friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

inline void validate(const Thresholds& th) {
    if (!(th.xi_sum > 0.0) || !(th.xi_max > 0.0)) {
        throw invalid_input("thresholds must be positive");
    }
}

enum class Trigger { sum, max, both };

inline std::string to_string(Trigger t) {
    switch (t) {
        case Trigger::sum: return "sum";
        case Trigger::max: return "max";
        case Trigger::both: return "both";
    }
    return "?";
}

struct DetectionEvent {
    std::int64_t time = 0;
    Trigger trigger = Trigger::sum;
    double sum_stat = 0.0;
    double max_stat = 0.0;
    std::size_t max_quantile_index = 0;
    std::int64_t tau_hat = 0;
};

struct StepResult {
    enum class Kind { probation, monitoring, detection };
    Kind kind = Kind::probation;
    std::int64_t time = 0;
    double sum_stat = 0.0;
    double max_stat = 0.0;
    std::optional<DetectionEvent> event;
};

struct NpFocusConfig {
    std::size_t quantiles = 15;
    std::size_t probation = 100;
    Mode mode = Mode::known_theta0;
    Thresholds thresholds;
};

class NpFocus {
  public:
    explicit NpFocus(NpFocusConfig config) : config_(std::move(config)) {
        if (config_.quantiles == 0) {
            throw invalid_input("at least one quantile is required");
        }
        if (config_.probation == 0) {
            throw invalid_input("probation length must be positive");
        }
        validate(config_.thresholds);
    }

    /// Start monitoring immediately with a grid fitted elsewhere.
    NpFocus(NpFocusConfig config, QuantileGrid grid) : NpFocus(std::move(config)) {
        if (grid.size() == 0 || grid.values.size() != grid.probs.size()) {
            throw invalid_input("grid is empty or inconsistent");
        }
        config_.quantiles = grid.size();
        start_monitoring(std::move(grid));
    }

    const NpFocusConfig& config() const { return config_; }
    const Thresholds& thresholds() const { return config_.thresholds; }
    bool monitoring() const { return grid_.has_value(); }
    const std::optional<QuantileGrid>& grid() const { return grid_; }
    std::span<const BernoulliFocus> detectors() const { return detectors_; }
    /// Number of observations consumed so far, probation included.
    std::int64_t time() const { return time_; }
    /// Stream time after which the current detectors started.
    std::int64_t monitor_origin() const { return origin_; }
    const std::deque<double>& rolling_window() const { return window_; }
    const std::vector<double>& probation_buffer() const { return buffer_; }

    StepResult step(double y) {
        if (std::isnan(y)) {
            throw invalid_input("NaN observation at t=" + std::to_string(time_ + 1));
        }
        ++time_;
        window_.push_back(y);
        if (window_.size() > config_.probation) {
            window_.pop_front();
        }

        StepResult out;
        out.time = time_;
        if (!grid_) {
            buffer_.push_back(y);
            if (buffer_.size() >= config_.probation) {
                auto grid = fit_grid(buffer_, config_.quantiles);
                buffer_.clear();
                start_monitoring(std::move(grid));
            }
            out.kind = StepResult::Kind::probation;
            return out;
        }

        const auto& values = grid_->values;
        double sum = 0.0;
        double max = 0.0;
        std::size_t arg = 0;
        for (std::size_t m = 0; m < detectors_.size(); ++m) {
            const double stat = detectors_[m].update(binarize(y, values[m]));
            sum += stat;
            if (stat > max) {
                max = stat;
                arg = m;
            }
        }
        out.sum_stat = sum;
        out.max_stat = max;
        out.kind = StepResult::Kind::monitoring;

        const bool by_sum = sum >= config_.thresholds.xi_sum;
        const bool by_max = max >= config_.thresholds.xi_max;
        if (by_sum || by_max) {
            DetectionEvent ev;
            ev.time = time_;
            ev.trigger = by_sum && by_max ? Trigger::both : (by_sum ? Trigger::sum : Trigger::max);
            ev.sum_stat = sum;
            ev.max_stat = max;
            ev.max_quantile_index = arg;
            ev.tau_hat = origin_ + detectors_[arg].changepoint_estimate();
            out.kind = StepResult::Kind::detection;
            out.event = ev;
        }
        return out;
    }

    /// Refit the grid on the rolling window and reset every detector. With
    /// fewer than two buffered observations a fresh, full probation period starts.
    void restart() {
        detectors_.clear();
        if (window_.size() < 2) {
            grid_.reset();
            buffer_.clear();
            return;
        }
        const std::vector<double> recent(window_.begin(), window_.end());
        start_monitoring(fit_grid(recent, config_.quantiles));
    }

    nlohmann::json snapshot() const;
    static NpFocus from_snapshot(const nlohmann::json& j);

  private:
    void start_monitoring(QuantileGrid grid) {
        detectors_.clear();
        detectors_.reserve(grid.size());
        for (double p : grid.probs) {
            detectors_.push_back(config_.mode == Mode::known_theta0 ? BernoulliFocus::known(p)
                                                                    : BernoulliFocus::unknown());
        }
        grid_ = std::move(grid);
        origin_ = time_;
    }

    NpFocusConfig config_;
    std::optional<QuantileGrid> grid_;
    std::vector<BernoulliFocus> detectors_;
    std::vector<double> buffer_;
    std::deque<double> window_;
    std::int64_t time_ = 0;
    std::int64_t origin_ = 0;
};

// --- JSON -------------------------------------------------------------------

namespace detail {

inline nlohmann::json finite_or_null(double v) {
    if (std::isinf(v)) {
        return nullptr;
    }
    return v;
}

inline double null_as_infinity(const nlohmann::json& j) {
    if (j.is_null()) {
        return std::numeric_limits<double>::infinity();
    }
    return j.get<double>();
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const CalibrationMeta& m) {
    j = nlohmann::json{{"seed", m.seed},
                       {"replicates", m.replicates},
                       {"run_length", m.run_length},
                       {"method", m.method},
                       {"mode", m.mode},
                       {"provisional_sum", detail::finite_or_null(m.provisional_sum)},
                       {"provisional_max", detail::finite_or_null(m.provisional_max)},
                       {"multiplier", m.multiplier},
                       {"warnings", m.warnings}};
}

inline void from_json(const nlohmann::json& j, CalibrationMeta& m) {
    m.seed = j.value("seed", std::uint64_t{0});
    m.replicates = j.value("replicates", std::size_t{0});
    m.run_length = j.value("run_length", std::size_t{0});
    m.method = j.value("method", std::string("manual"));
    m.mode = j.value("mode", std::string());
    m.provisional_sum = j.contains("provisional_sum") ? detail::null_as_infinity(j["provisional_sum"]) : 0.0;
    m.provisional_max = j.contains("provisional_max") ? detail::null_as_infinity(j["provisional_max"]) : 0.0;
    m.multiplier = j.value("multiplier", 1.0);
    m.warnings = j.value("warnings", std::vector<std::string>{});
}

inline void to_json(nlohmann::json& j, const Thresholds& th) {
    j = nlohmann::json{{"schema_version", kThresholdsSchemaVersion},
                       {"xi_sum", detail::finite_or_null(th.xi_sum)},
                       {"xi_max", detail::finite_or_null(th.xi_max)},
                       {"target_arl", th.target_arl},
                       {"meta", th.meta}};
}

inline void from_json(const nlohmann::json& j, Thresholds& th) {
    try {
        if (j.at("schema_version").get<int>() != kThresholdsSchemaVersion) {
            throw invalid_input("unsupported thresholds schema_version");
        }
        th.xi_sum = detail::null_as_infinity(j.at("xi_sum"));
        th.xi_max = detail::null_as_infinity(j.at("xi_max"));
        th.target_arl = j.value("target_arl", std::size_t{0});
        th.meta = j.contains("meta") ? j["meta"].get<CalibrationMeta>() : CalibrationMeta{};
    } catch (const nlohmann::json::exception& e) {
        throw invalid_input(std::string("malformed thresholds JSON: ") + e.what());
    }
    validate(th);
}

inline nlohmann::json to_json(const DetectionEvent& ev) {
    return nlohmann::json{{"t", ev.time},
                          {"trigger", to_string(ev.trigger)},
                          {"sum", ev.sum_stat},
                          {"max", ev.max_stat},
                          {"max_quantile_index", ev.max_quantile_index},
                          {"tau_hat", ev.tau_hat}};
}

namespace detail {

inline nlohmann::json pieces_to_json(const SideState& side) {
    auto arr = nlohmann::json::array();
    for (const Piece& p : side.pieces()) {
        if (side.has_offsets()) {
            arr.push_back({p.a, p.b, p.c});
        } else {
            arr.push_back({p.a, p.b});
        }
    }
    return arr;
}

inline std::deque<Piece> pieces_from_json(const nlohmann::json& arr, bool offsets) {
    std::deque<Piece> out;
    for (const auto& item : arr) {
        Piece p;
        p.a = item.at(0).get<std::int64_t>();
        p.b = item.at(1).get<std::int64_t>();
        if (offsets) {
            p.c = item.at(2).get<double>();
        }
        out.push_back(p);
    }
    return out;
}

}  // namespace detail

inline nlohmann::json NpFocus::snapshot() const {
    nlohmann::json j;
    j["schema_version"] = kSnapshotSchemaVersion;
    j["config"] = {{"quantiles", config_.quantiles},
                   {"probation", config_.probation},
                   {"mode", to_string(config_.mode)},
                   {"thresholds", config_.thresholds}};
    j["time"] = time_;
    j["monitor_origin"] = origin_;
    j["grid"] = grid_ ? nlohmann::json(*grid_) : nlohmann::json(nullptr);
    j["probation_buffer"] = buffer_;
    j["rolling_window"] = std::vector<double>(window_.begin(), window_.end());
    auto dets = nlohmann::json::array();
    for (const auto& d : detectors_) {
        dets.push_back({{"n", d.time()},
                        {"prefix_ones", d.prefix_ones()},
                        {"up", detail::pieces_to_json(d.up())},
                        {"down", detail::pieces_to_json(d.down())},
                        {"comparisons", {d.up().comparisons(), d.down().comparisons()}}});
    }
    j["detectors"] = dets;
    return j;
}

inline NpFocus NpFocus::from_snapshot(const nlohmann::json& j) {
    try {
        if (j.at("schema_version").get<int>() != kSnapshotSchemaVersion) {
            throw invalid_input("unsupported snapshot schema_version");
        }
        const auto& c = j.at("config");
        NpFocusConfig config;
        config.quantiles = c.at("quantiles").get<std::size_t>();
        config.probation = c.at("probation").get<std::size_t>();
        config.mode = parse_mode(c.at("mode").get<std::string>());
        config.thresholds = c.at("thresholds").get<Thresholds>();

        NpFocus out(config);
        out.time_ = j.at("time").get<std::int64_t>();
        out.buffer_ = j.at("probation_buffer").get<std::vector<double>>();
        const auto window = j.at("rolling_window").get<std::vector<double>>();
        out.window_.assign(window.begin(), window.end());
        if (!j.at("grid").is_null()) {
            out.start_monitoring(j.at("grid").get<QuantileGrid>());
            out.origin_ = j.at("monitor_origin").get<std::int64_t>();
            const auto& dets = j.at("detectors");
            if (dets.size() != out.detectors_.size()) {
                throw invalid_input("snapshot detector count does not match the grid");
            }
            for (std::size_t m = 0; m < dets.size(); ++m) {
                auto& det = out.detectors_[m];
                const bool offsets = !det.baseline_known();
                SideState up = offsets ? SideState::unknown_baseline(Direction::up)
                                       : SideState(Direction::up, *det.theta0());
                SideState down = offsets ? SideState::unknown_baseline(Direction::down)
                                         : SideState(Direction::down, *det.theta0());
                const auto& cmp = dets[m].at("comparisons");
                up.assign(detail::pieces_from_json(dets[m].at("up"), offsets), cmp.at(0).get<std::uint64_t>());
                down.assign(detail::pieces_from_json(dets[m].at("down"), offsets), cmp.at(1).get<std::uint64_t>());
                det.assign(dets[m].at("n").get<std::int64_t>(), dets[m].at("prefix_ones").get<std::int64_t>(),
                           std::move(up), std::move(down));
            }
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw invalid_input(std::string("malformed snapshot JSON: ") + e.what());
    }
}

}  // namespace npfocus
