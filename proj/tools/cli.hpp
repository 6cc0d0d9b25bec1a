#pragma once

// Command-line front end: detect, calibrate, simulate, bench, debug.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <npfocus/npfocus.hpp>

namespace npfocus::cli {

using nlohmann::json;

/// Flat JSON object as a CLI11 config source: {"flag": value, ...}. Arrays
/// become repeated values, booleans map onto flags.
class JsonConfig : public CLI::Config {
  public:
    // Keys in the file belong to whichever subcommand was selected.
    explicit JsonConfig(const CLI::App* root = nullptr) : root_(root) {}

    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
        json j = json::object();
        for (const CLI::Option* opt : app->get_options({})) {
            if (opt->get_lnames().empty() || !opt->get_configurable()) {
                continue;
            }
            const std::string name = opt->get_lnames()[0];
            if (opt->count() > 0) {
                j[name] = opt->as<std::string>();
            } else if (default_also && !opt->get_default_str().empty()) {
                j[name] = opt->get_default_str();
            }
        }
        return j.dump(2);
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json j;
        try {
            input >> j;
        } catch (const json::exception& e) {
            throw CLI::ConversionError(std::string("malformed config: ") + e.what());
        }
        if (!j.is_object()) {
            throw CLI::ConversionError("config must be a JSON object");
        }
        std::vector<std::string> parents;
        if (root_ != nullptr && !root_->get_subcommands().empty()) {
            parents.push_back(root_->get_subcommands().front()->get_name());
        }
        std::vector<CLI::ConfigItem> items;
        for (const auto& [key, value] : j.items()) {
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array()) {
                for (const auto& v : value) {
                    item.inputs.push_back(scalar(v));
                }
            } else {
                item.inputs.push_back(scalar(value));
            }
            items.push_back(std::move(item));
        }
        return items;
    }

  private:
    const CLI::App* root_;

    static std::string scalar(const json& v) {
        if (v.is_string()) {
            return v.get<std::string>();
        }
        if (v.is_boolean()) {
            return v.get<bool>() ? "true" : "false";
        }
        if (v.is_number() || v.is_null()) {
            return v.dump();
        }
        // Nested objects are passed through as JSON text (e.g. scenario params).
        return v.dump();
    }
};

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw invalid_input("cannot read " + path);
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline json read_json(const std::string& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw invalid_input("malformed JSON in " + path + ": " + e.what());
    }
}

inline void write_text(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw invalid_input("cannot write " + path);
    }
    f << text;
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Parse one field as a finite-or-infinite number. Blank fields, NaN and
/// trailing garbage are rejected.
inline double parse_value(std::string_view field, std::size_t line_no) {
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) {
        field.remove_prefix(1);
    }
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
        field.remove_suffix(1);
    }
    if (field.empty()) {
        throw invalid_input("blank value on line " + std::to_string(line_no));
    }
    if (field.front() == '+') {
        field.remove_prefix(1);
    }
    double v = 0.0;
    const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || end != field.data() + field.size()) {
        throw invalid_input("cannot parse '" + std::string(field) + "' on line " + std::to_string(line_no));
    }
    if (std::isnan(v)) {
        throw invalid_input("NaN on line " + std::to_string(line_no));
    }
    return v;
}

/// Field `column` (1-based) of a comma-separated line.
inline std::string_view csv_field(std::string_view line, std::size_t column, std::size_t line_no) {
    std::size_t start = 0;
    for (std::size_t c = 1; c < column; ++c) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            throw invalid_input("line " + std::to_string(line_no) + " has fewer than " + std::to_string(column) +
                                " columns");
        }
        start = comma + 1;
    }
    const auto comma = line.find(',', start);
    return line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
}

inline std::vector<double> read_values(std::istream& in, std::size_t column, bool header) {
    std::vector<double> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (header && line_no == 1) {
            continue;
        }
        const std::string_view view = column > 0 ? csv_field(line, column, line_no) : std::string_view(line);
        out.push_back(parse_value(view, line_no));
    }
    return out;
}

inline std::vector<double> read_values(const std::string& path, std::size_t column, bool header) {
    if (path == "-") {
        return read_values(std::cin, column, header);
    }
    std::ifstream in(path);
    if (!in) {
        throw invalid_input("cannot read " + path);
    }
    return read_values(in, column, header);
}

inline ScenarioSpec scenario_from_flags(const std::string& name, std::size_t n, std::size_t tau, std::uint64_t seed,
                                        const std::string& params) {
    ScenarioSpec spec = make_scenario(name, n, tau, seed);
    if (!params.empty()) {
        json j;
        try {
            j = json::parse(params.front() == '{' ? params : read_text(params));
        } catch (const json::parse_error& e) {
            throw invalid_input(std::string("malformed --params: ") + e.what());
        }
        apply_scenario_params(spec.kind, j);
    }
    validate(spec);
    return spec;
}

inline std::vector<int> parse_bits(const std::string& text) {
    std::vector<int> bits;
    for (char c : text) {
        if (c == '0' || c == '1') {
            bits.push_back(c - '0');
        } else if (c != ',' && c != ' ') {
            throw invalid_input(std::string("bits must be 0/1, got '") + c + "'");
        }
    }
    return bits;
}

struct DetectOptions {
    std::string input;
    std::size_t column = 0;
    bool header = false;
    std::string thresholds;
    std::string grid;
    std::size_t probation = 100;
    std::size_t quantiles = 15;
    std::string mode = "unknown";
    bool trace = false;
    bool no_restart = false;
};

inline int run_detect(const DetectOptions& o, std::ostream& out) {
    NpFocusConfig config;
    config.probation = o.probation;
    config.quantiles = o.quantiles;
    config.mode = parse_mode(o.mode);
    config.thresholds = read_json(o.thresholds).get<Thresholds>();
    std::optional<NpFocus> detector;
    if (!o.grid.empty()) {
        detector.emplace(config, read_json(o.grid).get<QuantileGrid>());
    } else {
        detector.emplace(config);
    }
    const auto values = read_values(o.input, o.column, o.header);

    std::string buffer;
    buffer.reserve(1 << 16);
    char line[256];
    for (double y : values) {
        const auto step = detector->step(y);
        if (step.kind == StepResult::Kind::probation) {
            continue;
        }
        const bool detected = step.event.has_value();
        if (!detected && !o.trace) {
            continue;
        }
        const std::string tau_hat = detected ? std::to_string(step.event->tau_hat) : "null";
        std::snprintf(line, sizeof line, "{\"t\":%lld,\"sum\":%.17g,\"max\":%.17g,\"detected\":%s,\"tau_hat\":%s}\n",
                      static_cast<long long>(step.time), step.sum_stat, step.max_stat, detected ? "true" : "false",
                      tau_hat.c_str());
        buffer += line;
        if (buffer.size() > (1 << 15)) {
            out << buffer;
            buffer.clear();
        }
        if (detected) {
            if (o.no_restart) {
                break;
            }
            detector->restart();
        }
    }
    out << buffer;
    return 0;
}

struct CalibrateOptions {
    std::string scenario;
    std::string params;
    std::string training;
    std::size_t arl = 10000;
    std::size_t replicates = 200;
    std::uint64_t seed = 0;
    std::size_t quantiles = 15;
    std::size_t probation = 100;
    std::string mode = "unknown";
    std::string out;
    std::string grid_out;
};

inline int run_calibrate(const CalibrateOptions& o, std::ostream& out, std::ostream& err) {
    if (o.scenario.empty() == o.training.empty()) {
        throw invalid_input("exactly one of --scenario and --training is required");
    }
    const Mode mode = parse_mode(o.mode);
    NullSampler sampler;
    std::vector<double> training;
    if (!o.scenario.empty()) {
        ScenarioSpec spec = scenario_from_flags(o.scenario, 0, 0, o.seed, o.params);
        sampler = pre_change_sampler(spec);
    } else {
        training = read_values(o.training, 0, false);
        sampler = NullSampler{BootstrapNull{training}, o.seed};
    }
    GridPolicy policy = ProbationGrid{o.probation, o.quantiles};
    if (!o.grid_out.empty()) {
        if (training.empty()) {
            throw invalid_input("--grid-out needs --training");
        }
        const QuantileGrid grid = fit_grid(training, o.quantiles);
        std::ofstream f(o.grid_out, std::ios::binary);
        if (!f) {
            throw invalid_input("cannot write " + o.grid_out);
        }
        f << json(grid).dump(2) << "\n";
        policy = grid;
    }
    const Thresholds th = calibrate(sampler, policy, o.arl, o.replicates, mode);
    for (const auto& w : th.meta.warnings) {
        err << "warning: " << w << "\n";
    }
    write_text(o.out, json(th).dump(2) + "\n", out);
    return 0;
}

struct SimulateOptions {
    std::string scenario;
    std::string params;
    std::size_t n = 0;
    std::size_t tau = 0;
    std::uint64_t seed = 0;
};

inline int run_simulate(const SimulateOptions& o, std::ostream& out) {
    const auto ys = generate(scenario_from_flags(o.scenario, o.n, o.tau, o.seed, o.params));
    std::string text;
    text.reserve(ys.size() * 24);
    for (double y : ys) {
        text += format_double(y);
        text += '\n';
    }
    out << text;
    return 0;
}

struct BenchOptions {
    std::string scenario;
    std::string params;
    std::size_t replicates = 100;
    std::size_t arl = 10000;
    std::uint64_t seed = 0;
    std::size_t tau = 1500;
    std::size_t n = 0;
    std::size_t quantiles = 15;
    std::size_t probation = 100;
    std::string mode = "unknown";
    std::size_t calibration_replicates = 200;
    std::string thresholds;
    std::string out;
    std::string curve;
    std::vector<std::size_t> elbow;
};

inline ExperimentConfig experiment_from_flags(const BenchOptions& o) {
    ExperimentConfig cfg;
    const std::size_t n = o.n > 0 ? o.n : o.tau + 1000;
    cfg.scenario = scenario_from_flags(o.scenario, n, o.tau, 0, o.params);
    cfg.replicates = o.replicates;
    cfg.target_arl = o.arl;
    cfg.probation = o.probation;
    cfg.quantiles = o.quantiles;
    cfg.mode = parse_mode(o.mode);
    cfg.seed = o.seed;
    cfg.calibration_replicates = o.calibration_replicates;
    if (!o.thresholds.empty()) {
        cfg.thresholds = read_json(o.thresholds).get<Thresholds>();
    }
    return cfg;
}

inline int run_bench(const BenchOptions& o, std::ostream& out) {
    const ExperimentConfig cfg = experiment_from_flags(o);
    if (!o.elbow.empty()) {
        const auto sweep = elbow_sweep(cfg, o.elbow);
        write_text(o.out, to_json(sweep).dump(2) + "\n", out);
        return 0;
    }
    const auto report = run_experiment(cfg);
    json j = to_json(report);
    j["mode"] = to_string(cfg.mode);
    j["seed"] = cfg.seed;
    j["target_arl"] = cfg.target_arl;
    j["probation"] = cfg.probation;
    write_text(o.out, j.dump(2) + "\n", out);
    if (!o.curve.empty()) {
        std::ostringstream csv;
        write_curve_csv(csv, report);
        write_text(o.curve, csv.str(), out);
    }
    return 0;
}

struct DebugOptions {
    std::string bits;
    double theta0 = 0.5;
    bool unknown = false;
};

inline std::vector<std::int64_t> stored_times(const BernoulliFocus& d, const SideState& side) {
    std::vector<std::int64_t> out;
    for (const Piece& p : side.pieces()) {
        out.push_back(d.time() - p.length());
    }
    return out;
}

/// Feed a bit string to one detector and compare every step with the
/// brute-force references. Returns 1 on any mismatch.
inline int run_debug(const DebugOptions& o, std::ostream& out) {
    const auto bits = parse_bits(o.bits);
    BernoulliFocus d = o.unknown ? BernoulliFocus::unknown() : BernoulliFocus::known(o.theta0);
    const double up_base = o.unknown ? 0.0 : o.theta0;
    const double down_base = o.unknown ? 0.0 : 1.0 - o.theta0;
    bool ok = true;
    std::vector<int> prefix;
    std::vector<int> flipped;
    for (int b : bits) {
        prefix.push_back(b);
        flipped.push_back(1 - b);
        const double stat = d.update(b != 0);
        const auto ref = o.unknown ? oracle::glr_oracle_unknown(prefix) : oracle::glr_oracle(prefix, o.theta0);
        const auto up = stored_times(d, d.up());
        const auto down = stored_times(d, d.down());
        const auto up_ref = oracle::minorant_survivors(prefix, up_base);
        const auto down_ref = oracle::minorant_survivors(flipped, down_base);
        const bool match = std::abs(stat - ref.stat) <= 1e-9 && up == up_ref && down == down_ref;
        ok = ok && match;
        json j;
        j["t"] = d.time();
        j["x"] = b;
        j["stat"] = stat;
        j["oracle"] = ref.stat;
        j["up"] = up;
        j["up_oracle"] = up_ref;
        j["down"] = down;
        j["down_oracle"] = down_ref;
        j["match"] = match;
        out << j.dump() << "\n";
    }
    return ok ? 0 : 1;
}

inline int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Nonparametric online changepoint detection on the empirical CDF"};
    app.require_subcommand(1);
    // --config may follow the subcommand name.
    app.fallthrough();
    app.allow_config_extras(false);
    app.config_formatter(std::make_shared<JsonConfig>(&app));
    app.set_config("--config", "", "JSON object of flag values for the chosen subcommand; explicit flags win");

    DetectOptions det;
    auto* detect = app.add_subcommand("detect", "Run the detector on a stream, one value per line");
    detect->add_option("--input", det.input, "Input file, or - for stdin")->required();
    detect->add_option("--column", det.column, "1-based CSV column (default: whole line)");
    detect->add_flag("--header", det.header, "Skip the first line");
    detect->add_option("--thresholds", det.thresholds, "Thresholds JSON")->required();
    detect->add_option("--grid", det.grid, "Quantile grid JSON; skips probation");
    detect->add_option("--probation", det.probation, "Probation length")->capture_default_str();
    detect->add_option("--M", det.quantiles, "Number of quantiles")->capture_default_str();
    detect->add_option("--mode", det.mode, "known | unknown")->capture_default_str();
    detect->add_flag("--trace", det.trace, "Emit a line for every monitored step");
    detect->add_flag("--no-restart", det.no_restart, "Stop at the first detection");

    CalibrateOptions cal;
    auto* calibrate_cmd = app.add_subcommand("calibrate", "Monte-Carlo thresholds for a target run length");
    calibrate_cmd->add_option("--scenario", cal.scenario, "Simulate this scenario's pre-change law");
    calibrate_cmd->add_option("--params", cal.params, "Scenario parameters (JSON text or file)");
    calibrate_cmd->add_option("--training", cal.training, "Bootstrap from this file instead");
    calibrate_cmd->add_option("--arl", cal.arl, "Target average run length")->capture_default_str();
    calibrate_cmd->add_option("--replicates", cal.replicates, "Null sequences")->capture_default_str();
    calibrate_cmd->add_option("--seed", cal.seed)->capture_default_str();
    calibrate_cmd->add_option("--M", cal.quantiles)->capture_default_str();
    calibrate_cmd->add_option("--probation", cal.probation)->capture_default_str();
    calibrate_cmd->add_option("--mode", cal.mode, "known | unknown")->capture_default_str();
    calibrate_cmd->add_option("--out", cal.out, "Output file (default stdout)");
    calibrate_cmd->add_option("--grid-out", cal.grid_out, "Fit a fixed grid on --training, write it here and calibrate with it");

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Write a simulated scenario, one value per line");
    simulate->add_option("--scenario", sim.scenario)->required();
    simulate->add_option("--params", sim.params, "Scenario parameters (JSON text or file)");
    simulate->add_option("--n", sim.n)->required();
    simulate->add_option("--tau", sim.tau)->required();
    simulate->add_option("--seed", sim.seed)->capture_default_str();

    BenchOptions ben;
    auto* bench = app.add_subcommand("bench", "Detection delay and false positive experiment");
    bench->add_option("--scenario", ben.scenario)->required();
    bench->add_option("--params", ben.params, "Scenario parameters (JSON text or file)");
    bench->add_option("--replicates", ben.replicates)->capture_default_str();
    bench->add_option("--arl", ben.arl)->capture_default_str();
    bench->add_option("--seed", ben.seed)->capture_default_str();
    bench->add_option("--tau", ben.tau)->capture_default_str();
    bench->add_option("--n", ben.n, "Stream length (default tau + 1000)");
    bench->add_option("--M", ben.quantiles)->capture_default_str();
    bench->add_option("--probation", ben.probation)->capture_default_str();
    bench->add_option("--mode", ben.mode, "known | unknown")->capture_default_str();
    bench->add_option("--calibration-replicates", ben.calibration_replicates)->capture_default_str();
    bench->add_option("--thresholds", ben.thresholds, "Use these thresholds instead of calibrating");
    bench->add_option("--out", ben.out, "Report file (default stdout)");
    bench->add_option("--curve", ben.curve, "Detection curve CSV");
    bench->add_option("--elbow", ben.elbow, "Sweep these M values instead")->delimiter(',');

    DebugOptions dbg;
    auto* debug = app.add_subcommand("debug", "Compare one detector against the brute-force references");
    debug->add_option("--bits", dbg.bits, "e.g. 1,0,1,1")->required();
    debug->add_option("--theta0", dbg.theta0)->capture_default_str();
    debug->add_flag("--unknown", dbg.unknown, "Unknown pre-change rate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*detect) {
            return run_detect(det, out);
        }
        if (*calibrate_cmd) {
            return run_calibrate(cal, out, err);
        }
        if (*simulate) {
            return run_simulate(sim, out);
        }
        if (*bench) {
            return run_bench(ben, out);
        }
        return run_debug(dbg, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace npfocus::cli
