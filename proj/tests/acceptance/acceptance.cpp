// Acceptance checks. Run with --criterion k (1..10) or --all.
// Prints one PASS/FAIL line per criterion; exit status is nonzero on failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <npfocus/npfocus.hpp>

using namespace npfocus;

namespace {

// Pinned tolerances.
constexpr double kExactTol = 1e-9;
constexpr double kCurveCountBound = 10.21;
constexpr double kQuantileTol = 1e-5;
constexpr double kSymmetryTol = 1e-12;
constexpr double kArlLow = 1000.0;
constexpr double kArlHigh = 4000.0;
constexpr double kElbowRatio = 0.30;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

bool report(int k, const std::string& name, bool pass, const std::string& detail) {
    std::printf("criterion %d [%s] %s: %s\n", k, pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    return pass;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::vector<int> bits(std::mt19937_64& gen, std::size_t n, double p) {
    std::bernoulli_distribution d(p);
    std::vector<int> xs(n);
    for (auto& x : xs) x = d(gen) ? 1 : 0;
    return xs;
}

// A stream whose rate jumps partway so the statistics actually move.
std::vector<int> stream_with_change(std::mt19937_64& gen, std::size_t n, double before) {
    std::uniform_int_distribution<std::size_t> where(0, n);
    std::uniform_real_distribution<double> rate(0.02, 0.98);
    const std::size_t change = where(gen);
    auto xs = bits(gen, change, before);
    const auto tail = bits(gen, n - change, rate(gen));
    xs.insert(xs.end(), tail.begin(), tail.end());
    return xs;
}

std::vector<std::int64_t> stored_taus(const BernoulliFocus& d, const SideState& side) {
    std::vector<std::int64_t> out;
    for (const auto& p : side.pieces()) out.push_back(d.time() - p.length());
    return out;
}

bool oracle_equivalence() {
    const auto start = Clock::now();
    std::mt19937_64 gen(101);
    double worst = 0.0;
    for (double theta0 : {0.1, 0.25, 0.5, 0.9}) {
        for (int s = 0; s < 100; ++s) {
            const auto xs = stream_with_change(gen, 500, theta0);
            auto d = BernoulliFocus::known(theta0);
            for (std::size_t t = 0; t < xs.size(); ++t) {
                const double got = d.update(xs[t] != 0);
                const double want = oracle::glr_oracle(std::span(xs).first(t + 1), theta0).stat;
                worst = std::max(worst, std::abs(got - want));
            }
        }
    }
    const double secs = seconds_since(start);
    return report(1, "oracle equivalence", worst <= kExactTol && secs < 30.0,
                  fmt("max |diff| %.3g (tol %.0e) over 4x100 streams of 500, %.1f s (limit 30 s)", worst, kExactTol, secs));
}

bool unknown_equivalence() {
    std::mt19937_64 gen(202);
    std::uniform_real_distribution<double> rate(0.05, 0.95);
    double worst = 0.0;
    for (int s = 0; s < 100; ++s) {
        const auto xs = stream_with_change(gen, 300, rate(gen));
        auto d = BernoulliFocus::unknown();
        for (std::size_t t = 0; t < xs.size(); ++t) {
            const double got = d.update(xs[t] != 0);
            const double want = oracle::glr_oracle_unknown(std::span(xs).first(t + 1)).stat;
            worst = std::max(worst, std::abs(got - want));
        }
    }
    return report(2, "unknown-rate equivalence", worst <= kExactTol,
                  fmt("max |diff| %.3g (tol %.0e) over 100 streams of 300", worst, kExactTol));
}

bool survivor_sets() {
    std::mt19937_64 gen(303);
    const double rates[] = {0.1, 0.25, 0.5, 0.9};
    std::size_t mismatches = 0;
    std::size_t checks = 0;
    for (int s = 0; s < 50; ++s) {
        const double theta0 = rates[s % 4];
        const auto xs = stream_with_change(gen, 200, theta0);
        std::vector<int> flipped(xs.size());
        std::transform(xs.begin(), xs.end(), flipped.begin(), [](int x) { return 1 - x; });
        auto d = BernoulliFocus::known(theta0);
        for (std::size_t t = 0; t < xs.size(); ++t) {
            d.update(xs[t] != 0);
            checks += 2;
            if (stored_taus(d, d.up()) != oracle::minorant_survivors(std::span(xs).first(t + 1), theta0)) {
                ++mismatches;
            }
            if (stored_taus(d, d.down()) != oracle::minorant_survivors(std::span(flipped).first(t + 1), 1.0 - theta0)) {
                ++mismatches;
            }
        }
    }
    return report(3, "survivor sets", mismatches == 0,
                  fmt("%zu mismatches in %zu side/step checks over 50 streams of 200", mismatches, checks));
}

bool curve_count() {
    const auto start = Clock::now();
    constexpr std::size_t n = 10000;
    std::mt19937_64 gen(404);
    double total_pieces = 0.0;
    std::uint64_t worst_comparisons = 0;
    for (int s = 0; s < 200; ++s) {
        const auto xs = bits(gen, n, 0.5);
        auto d = BernoulliFocus::known(0.5);
        for (int x : xs) d.update(x != 0);
        total_pieces += static_cast<double>(d.up().pieces().size());
        worst_comparisons = std::max({worst_comparisons, d.up().comparisons(), d.down().comparisons()});
    }
    const double mean = total_pieces / 200.0;
    const double secs = seconds_since(start);
    const bool pass = mean <= kCurveCountBound && worst_comparisons <= 2 * n && secs < 60.0;
    return report(4, "curve count", pass,
                  fmt("mean up-side pieces %.3f (bound %.2f), worst per-side comparisons %llu (bound %zu), %.1f s",
                      mean, kCurveCountBound, static_cast<unsigned long long>(worst_comparisons), 2 * n, secs));
}

bool quantile_formula() {
    const auto p = geometric_probabilities(3, 100);
    const double expected[] = {0.02843, 0.5, 0.97157};
    double literal_err = 0.0;
    for (int i = 0; i < 3; ++i) literal_err = std::max(literal_err, std::abs(p[i] - expected[i]));
    double symmetry_err = 0.0;
    for (std::size_t m : {3u, 15u, 25u}) {
        for (std::size_t n : {10u, 100u, 1000u, 10000u}) {
            const auto q = geometric_probabilities(m, n);
            for (std::size_t i = 0; i < m; ++i) symmetry_err = std::max(symmetry_err, std::abs(q[i] + q[m - 1 - i] - 1.0));
        }
    }
    return report(5, "quantile probabilities", literal_err <= kQuantileTol && symmetry_err <= kSymmetryTol,
                  fmt("(M=3,n=100) -> [%.7f, %.7f, %.7f], max error vs [0.02843, 0.5, 0.97157] %.2e (tol %.0e); "
                      "symmetry error %.2e (tol %.0e)",
                      p[0], p[1], p[2], literal_err, kQuantileTol, symmetry_err, kSymmetryTol));
}

std::vector<std::pair<double, double>> aggregate_trace(const std::vector<double>& ys, Mode mode) {
    NpFocusConfig cfg;
    cfg.mode = mode;
    NpFocus det(cfg);
    std::vector<std::pair<double, double>> out;
    for (double y : ys) {
        const auto r = det.step(y);
        out.emplace_back(r.sum_stat, r.max_stat);
    }
    return out;
}

bool transform_invariance() {
    const std::vector<std::pair<std::string, std::function<double(double)>>> maps{
        {"exp", [](double x) { return std::exp(x); }},
        {"cube", [](double x) { return std::pow(x + 10.0, 3.0); }},
        {"arctan", [](double x) { return std::atan(x) * 2.0 / std::numbers::pi; }},
    };
    std::mt19937_64 gen(606);
    std::normal_distribution<double> noise;
    std::size_t differing = 0;
    for (int s = 0; s < 20; ++s) {
        std::vector<double> ys(1000);
        for (std::size_t t = 0; t < ys.size(); ++t) ys[t] = noise(gen) + (t >= 600 ? 0.7 : 0.0);
        for (Mode mode : {Mode::known_theta0, Mode::unknown_theta0}) {
            const auto base = aggregate_trace(ys, mode);
            for (const auto& [name, phi] : maps) {
                std::vector<double> mapped(ys.size());
                std::transform(ys.begin(), ys.end(), mapped.begin(), phi);
                if (aggregate_trace(mapped, mode) != base) ++differing;
            }
        }
    }
    return report(6, "monotone transform invariance", differing == 0,
                  fmt("%zu of 120 (stream, mode, map) traces differ bitwise", differing));
}

bool calibration_consistency() {
    const auto start = Clock::now();
    constexpr std::size_t run_length = 2000;
    constexpr std::size_t cap = 20 * run_length;
    std::mt19937_64 gen(707);
    std::normal_distribution<double> noise;
    std::vector<double> training(10000);
    for (auto& v : training) v = noise(gen);
    const auto grid = fit_grid(training, 15);
    const auto thresholds =
        calibrate(pre_change_sampler(make_scenario("gauss", 0, 0, 77)), grid, run_length, 200, Mode::known_theta0);

    std::vector<double> run_lengths(200);
    std::size_t capped = 0;
    for (auto& rl : run_lengths) {
        NpFocus det(NpFocusConfig{15, 100, Mode::known_theta0, thresholds}, grid);
        std::size_t t = 0;
        while (t < cap) {
            ++t;
            if (det.step(noise(gen)).event) break;
        }
        capped += (t == cap) ? 1 : 0;
        rl = static_cast<double>(t);
    }
    double mean = 0.0;
    for (double v : run_lengths) mean += v / 200.0;
    const double secs = seconds_since(start);
    return report(7, "calibration self-consistency", mean >= kArlLow && mean <= kArlHigh && secs < 120.0,
                  fmt("mean run length %.1f over 200 null streams (target [%.0f, %.0f]), thresholds %.2f/%.2f, "
                      "%zu capped at %zu, %.1f s",
                      mean, kArlLow, kArlHigh, thresholds.xi_sum, thresholds.xi_max, capped, cap, secs));
}

ExperimentConfig table_config(const std::string& scenario) {
    ExperimentConfig cfg;
    cfg.scenario = make_scenario(scenario, 2500, 1500, 1);
    cfg.replicates = 100;
    cfg.target_arl = 10000;
    cfg.probation = 100;
    cfg.quantiles = 15;
    cfg.mode = Mode::unknown_theta0;
    cfg.seed = 1;
    return cfg;
}

bool table_reproduction() {
    const auto start = Clock::now();
    struct Row {
        std::string scenario;
        double delay_low;
        double delay_high;  // strict upper bound, except gauss which is a closed interval
        double fpr_max;
    };
    const std::vector<Row> rows{
        {"gauss", 11.0, 45.0, 0.05}, {"tails", 0.0, 150.0, 1.0},       {"cauchy", 0.0, 100.0, 1.0},
        {"multim", 0.0, 135.0, 1.0}, {"ou", 0.0, 500.0, 0.1},          {"sinusoidal", 0.0, 500.0, 0.1},
    };
    bool all = true;
    for (const auto& row : rows) {
        const auto rep = run_experiment(table_config(row.scenario));
        const double delay = rep.avg_delay.value_or(INFINITY);
        const bool delay_ok = row.scenario == "gauss" ? (delay >= row.delay_low && delay <= row.delay_high)
                                                      : delay < row.delay_high;
        const bool pass = delay_ok && rep.fpr <= row.fpr_max;
        all = all && pass;
        const std::string bound = row.scenario == "gauss" ? fmt("in [%.0f, %.0f]", row.delay_low, row.delay_high)
                                                          : fmt("< %.0f", row.delay_high);
        std::printf("  %-10s delay %s (%s) fpr %.2f (<= %.2f) censored %zu thresholds %.2f/%.2f %s\n",
                    row.scenario.c_str(), rep.delay_display().c_str(), bound.c_str(), rep.fpr, row.fpr_max,
                    rep.censored, rep.thresholds.xi_sum, rep.thresholds.xi_max, pass ? "ok" : "out of bounds");
    }
    return report(8, "table reproduction", all, fmt("six scenarios, 100 replicates, ARL 10000, tau 1500, %.0f s",
                                                    seconds_since(start)));
}

bool elbow() {
    const auto sweep = elbow_sweep(table_config("gauss"), {3, 15, 25});
    const auto& m3 = sweep[0].report;
    const auto& m15 = sweep[1].report;
    const auto& m25 = sweep[2].report;
    if (!m3.avg_delay || !m15.avg_delay || !m25.avg_delay) {
        return report(9, "quantile elbow", false, "a sweep point made no true detections");
    }
    const double pooled = std::sqrt(m3.delay_se() * m3.delay_se() + m15.delay_se() * m15.delay_se());
    const bool gain = *m15.avg_delay <= *m3.avg_delay + pooled;
    const double rel = std::abs(*m15.avg_delay - *m25.avg_delay) / std::min(*m15.avg_delay, *m25.avg_delay);
    return report(9, "quantile elbow", gain && rel <= kElbowRatio,
                  fmt("delay M=3 %.2f, M=15 %.2f, M=25 %.2f; pooled SE %.2f; M=15 vs M=25 differ by %.1f%% (limit %.0f%%)",
                      *m3.avg_delay, *m15.avg_delay, *m25.avg_delay, pooled, 100.0 * rel, 100.0 * kElbowRatio));
}

std::string run_cli(const std::string& args) {
    const std::string cmd = std::string(NPFOCUS_CLI_PATH) + " " + args + " 2>&1; echo \"exit=$?\"";
    std::string out;
    if (FILE* pipe = popen(cmd.c_str(), "r")) {
        char buf[4096];
        std::size_t got = 0;
        while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
        pclose(pipe);
    }
    return out;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

bool cli_determinism() {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "npfocus_acceptance_cli";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string d = dir.string() + "/";
    run_cli("simulate --scenario gauss --n 3000 --tau 1500 --seed 7 > " + d + "s.csv");
    run_cli("simulate --scenario gauss --n 1000 --tau 1000 --seed 8 > " + d + "train.csv");

    // Each command writes only to stdout or to files under names keyed by the run.
    const std::vector<std::pair<std::string, std::string>> commands{
        {"simulate", "simulate --scenario ou --n 3000 --tau 1500 --seed 7"},
        {"calibrate", "calibrate --scenario gauss --arl 1000 --replicates 40 --seed 3"},
        {"calibrate-training", "calibrate --training " + d + "train.csv --arl 500 --replicates 20 --seed 3 --out " +
                                   d + "th_RUN.json --grid-out " + d + "grid_RUN.json"},
        {"detect", "detect --input " + d + "s.csv --thresholds " + d + "th_1.json --grid " + d + "grid_1.json --trace"},
        {"bench", "bench --scenario tails --replicates 10 --arl 2000 --seed 1 --calibration-replicates 30 --curve " +
                      d + "curve_RUN.csv"},
        {"debug", "debug --bits 1,0,0,1,1,1,0,1,0,0,0,1 --theta0 0.3"},
    };
    std::vector<std::string> differing;
    for (const auto& [name, cmd] : commands) {
        std::string outputs[2];
        for (int run = 0; run < 2; ++run) {
            std::string c = cmd;
            for (std::size_t pos; (pos = c.find("RUN")) != std::string::npos;) c.replace(pos, 3, std::to_string(run + 1));
            outputs[run] = run_cli(c);
        }
        bool same = outputs[0] == outputs[1] && outputs[0].find("exit=0") != std::string::npos;
        if (name == "calibrate-training") {
            same = same && slurp(d + "th_1.json") == slurp(d + "th_2.json") &&
                   slurp(d + "grid_1.json") == slurp(d + "grid_2.json");
        }
        if (name == "bench") {
            same = same && slurp(d + "curve_1.csv") == slurp(d + "curve_2.csv");
        }
        if (!same) differing.push_back(name);
    }
    fs::remove_all(dir);
    std::string detail = fmt("%zu of %zu subcommand runs reproduced byte for byte", commands.size() - differing.size(),
                             commands.size());
    for (const auto& n : differing) detail += "; differs or failed: " + n;
    return report(10, "CLI determinism", differing.empty(), detail);
}

}  // namespace

int main(int argc, char** argv) {
    const std::map<int, std::function<bool()>> criteria{
        {1, oracle_equivalence},      {2, unknown_equivalence}, {3, survivor_sets},
        {4, curve_count},             {5, quantile_formula},    {6, transform_invariance},
        {7, calibration_consistency}, {8, table_reproduction},  {9, elbow},
        {10, cli_determinism},
    };
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            selected.push_back(std::atoi(argv[++i]));
        } else if (std::strcmp(argv[i], "--all") == 0) {
            for (const auto& [k, fn] : criteria) selected.push_back(k);
        } else {
            std::fprintf(stderr, "usage: acceptance --criterion k | --all\n");
            return 2;
        }
    }
    if (selected.empty()) {
        for (const auto& [k, fn] : criteria) selected.push_back(k);
    }
    bool ok = true;
    for (int k : selected) {
        const auto it = criteria.find(k);
        if (it == criteria.end()) {
            std::fprintf(stderr, "no criterion %d\n", k);
            return 2;
        }
        try {
            ok = it->second() && ok;
        } catch (const std::exception& e) {
            report(k, "exception", false, e.what());
            ok = false;
        }
    }
    return ok ? 0 : 1;
}
