// Calibrate on simulated Gaussian noise, then watch a stream whose mean
// shifts at t = 1500.
#include <cstdio>

#include <npfocus/npfocus.hpp>

int main() {
    using namespace npfocus;

    const auto null_spec = make_scenario("gauss", 0, 0, 11);
    const auto thresholds =
        calibrate(pre_change_sampler(null_spec), ProbationGrid{100, 15}, 5000, 200, Mode::unknown_theta0);
    std::printf("thresholds: sum %.2f, max %.2f\n", thresholds.xi_sum, thresholds.xi_max);

    NpFocus detector(NpFocusConfig{15, 100, Mode::unknown_theta0, thresholds});
    const auto ys = generate(make_scenario("gauss", 3000, 1500, 12));
    for (double y : ys) {
        const auto r = detector.step(y);
        if (r.event) {
            std::printf("change detected at t=%lld (trigger %s, estimated start %lld)\n",
                        static_cast<long long>(r.event->time), to_string(r.event->trigger).c_str(),
                        static_cast<long long>(r.event->tau_hat));
            // Refit the grid on the most recent observations and carry on.
            detector.restart();
        }
    }
}
