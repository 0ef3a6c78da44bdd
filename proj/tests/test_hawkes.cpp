#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "hf/hawkes.hpp"
#include "hf/io.hpp"
#include "hf/rng.hpp"
#include "oracles.hpp"

using namespace hf;

namespace {

const ModelParams& sigmoid_mexhat() {
    static const ModelParams p =
        load_model_config(std::string(HF_SOURCE_DIR) + "/configs/sigmoid_mexhat.cfg");
    return p;
}

ModelParams poisson_params(double c) {
    return {FiringRate::constant(c), SynapticKernel::constant(0.0),
            InitialCondition::constant(0.0), 1.0};
}

}  // namespace

TEST_CASE("determinism: identical inputs give bit-identical logs") {
    const EventLog a = simulate_hawkes(sigmoid_mexhat(), 16, 2.0, 99);
    const EventLog b = simulate_hawkes(sigmoid_mexhat(), 16, 2.0, 99);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        CHECK(a.events[i].t == b.events[i].t);
        CHECK(a.events[i].neuron == b.events[i].neuron);
    }
}

TEST_CASE("event log invariants") {
    const EventLog log = simulate_hawkes(sigmoid_mexhat(), 32, 3.0, 7);
    CHECK(log.events.size() > 10);
    double prev = 0.0;
    for (const Event& ev : log.events) {
        CHECK(ev.t > prev);  // strictly increasing, in (0, T]
        CHECK(ev.t <= 3.0);
        CHECK(ev.neuron >= 1);
        CHECK(ev.neuron <= 32);
        prev = ev.t;
    }
}

TEST_CASE("potential_at: empty log decays the initial condition") {
    EventLog empty;
    empty.n = 4;
    empty.horizon = 2.0;
    const ModelParams& p = sigmoid_mexhat();
    for (int i = 1; i <= 4; ++i) {
        const double expect = std::exp(-1.3) * p.u0.eval(i / 4.0);
        CHECK(potential_at(empty, p, 1.3, i) == doctest::Approx(expect).epsilon(1e-15));
    }
    CHECK_THROWS_AS(potential_at(empty, p, 2.5, 1), std::invalid_argument);
    CHECK_THROWS_AS(potential_at(empty, p, 1.0, 5), std::invalid_argument);
}

TEST_CASE("potential_at: single event by direct substitution") {
    EventLog log;
    log.n = 4;
    log.horizon = 1.0;
    log.events.push_back({0.5, 2});
    const ModelParams& p = sigmoid_mexhat();
    for (int i = 1; i <= 4; ++i) {
        const double expect = std::exp(-0.8) * p.u0.eval(i / 4.0) +
                              0.25 * p.w.eval(0.5, i / 4.0) * std::exp(-0.3);
        CHECK(potential_at(log, p, 0.8, i) == doctest::Approx(expect).epsilon(1e-15));
    }
    // an event at exactly t is included
    CHECK(potential_at(log, p, 0.5, 1) ==
          doctest::Approx(std::exp(-0.5) * p.u0.eval(0.25) +
                          0.25 * p.w.eval(0.5, 0.25)).epsilon(1e-15));
}

TEST_CASE("potential_at matches the brute-force oracle on a random log") {
    const EventLog log = simulate_hawkes(sigmoid_mexhat(), 8, 6.0, 21);
    REQUIRE(log.events.size() >= 20);
    Rng rng(4);
    for (int s = 0; s < 40; ++s) {
        const double t = 6.0 * rng.uniform01();
        const int i = 1 + static_cast<int>(rng.uniform01() * 8);
        const double lib = potential_at(log, sigmoid_mexhat(), t, i);
        const double ora = oracle::brute_potential(log, sigmoid_mexhat(), t, i);
        CHECK(std::abs(lib - ora) <= 1e-12 * std::max(1.0, std::abs(ora)));
    }
}

TEST_CASE("incremental reconstruction agrees with direct sums") {
    const EventLog log = simulate_hawkes(sigmoid_mexhat(), 16, 4.0, 33);
    Rng rng(8);
    for (int s = 0; s < 20; ++s) {
        const double t = 4.0 * rng.uniform01();
        const auto all = potentials_at(log, sigmoid_mexhat(), t);
        for (int i = 1; i <= 16; i += 5) {
            const double direct = potential_at(log, sigmoid_mexhat(), t, i);
            CHECK(std::abs(all[i - 1] - direct) <=
                  1e-10 * std::max(1.0, std::abs(direct)));
        }
    }
}

TEST_CASE("decoupled constant-rate network is homogeneous Poisson") {
    const double c = 0.7, T = 2.0;
    const int n = 8, R = 2000;
    const ModelParams p = poisson_params(c);
    double sum = 0.0, sum2 = 0.0;
    const long cells = static_cast<long>(R) * n;
    for (int r = 0; r < R; ++r) {
        const EventLog log = simulate_hawkes(p, n, T, derive_seed(1234, 50, n, r));
        std::vector<long> per(n, 0);
        for (const Event& ev : log.events) ++per[ev.neuron - 1];
        for (int i = 0; i < n; ++i) {
            sum += per[i];
            sum2 += static_cast<double>(per[i]) * per[i];
        }
    }
    const double mean = sum / cells;
    const double var = sum2 / cells - mean * mean;
    const double se_mean = std::sqrt(c * T / cells);
    CHECK(std::abs(mean - c * T) < 3.0 * se_mean);
    // index of dispersion var/mean = 1 for Poisson; SE ~ sqrt(2/N)
    CHECK(std::abs(var / mean - 1.0) < 3.0 * std::sqrt(2.0 / cells));
}

TEST_CASE("decoupled decaying-potential network is inhomogeneous Poisson") {
    // w = 0, alpha = 1, u0 = 1: every neuron fires at rate f(e^{-s})
    const ModelParams p{FiringRate::sigmoid(1.0, 0.5, 0.05),
                        SynapticKernel::constant(0.0),
                        InitialCondition::constant(1.0), 1.0};
    const double T = 2.0;
    const int n = 8, R = 3000;
    const double target = oracle::integrate(
        [&](double s) { return p.f.eval(std::exp(-s)); }, 0.0, T, 1e-12);
    // frozen from the oracle before the build
    CHECK(target == doctest::Approx(1.0662769529334049).epsilon(1e-10));
    double sum = 0.0;
    for (int r = 0; r < R; ++r) {
        const EventLog log = simulate_hawkes(p, n, T, derive_seed(77, 51, n, r));
        sum += static_cast<double>(log.events.size());
    }
    const long cells = static_cast<long>(R) * n;
    const double mean = sum / cells;
    CHECK(std::abs(mean - target) < 3.0 * std::sqrt(target / cells));
}

TEST_CASE("compensator: constant rate integrates exactly") {
    const ModelParams p = poisson_params(0.9);
    const EventLog log = simulate_hawkes(p, 4, 2.0, 5);
    for (double t : {0.0, 0.7, 2.0})
        CHECK(std::abs(compensator(log, p, 2, t, 1e-12) - 0.9 * t) <= 1e-12);
    CHECK_THROWS_AS(compensator(log, p, 2, 1.0, -1.0), std::invalid_argument);
}

TEST_CASE("compensator: frozen potential when alpha = 0 and no events") {
    EventLog empty;
    empty.n = 4;
    empty.horizon = 3.0;
    const ModelParams p{FiringRate::sigmoid(1.0, 0.5, 0.05),
                        SynapticKernel::constant(0.0),
                        InitialCondition::smoothstep(1.0), 0.0};
    for (int j = 1; j <= 4; ++j) {
        const double expect = p.f.eval(p.u0.eval(j / 4.0)) * 2.5;
        CHECK(compensator(empty, p, j, 2.5, 1e-12) ==
              doctest::Approx(expect).epsilon(1e-13));
    }
}

TEST_CASE("compensator matches the fixed-step Simpson oracle") {
    const EventLog log = simulate_hawkes(sigmoid_mexhat(), 8, 6.0, 21);
    REQUIRE(log.events.size() >= 20);
    for (int j : {1, 4, 8}) {
        const double lib = compensator(log, sigmoid_mexhat(), j, 5.5, 1e-12);
        const double ora = oracle::simpson_compensator(log, sigmoid_mexhat(), j, 5.5);
        CHECK(std::abs(lib - ora) < 1e-8);
    }
}

TEST_CASE("weighted compensators match the plain one at beta = 0") {
    const EventLog log = simulate_hawkes(sigmoid_mexhat(), 8, 3.0, 15);
    const auto batch = weighted_compensators(log, sigmoid_mexhat(), 0.0, 2.7, 1e-12);
    for (int j = 1; j <= 8; ++j) {
        const double single = compensator(log, sigmoid_mexhat(), j, 2.7, 1e-12);
        CHECK(std::abs(batch[j - 1] - single) < 1e-11);
    }
}

TEST_CASE("martingale M^j_t has mean zero across replicas") {
    const int n = 4, R = 1200;
    const double t = 1.0;
    const ModelParams& p = sigmoid_mexhat();
    double sum = 0.0, sum2 = 0.0;
    for (int r = 0; r < R; ++r) {
        const EventLog log = simulate_hawkes(p, n, t, derive_seed(9, 52, n, r));
        long nj = 0;
        for (const Event& ev : log.events)
            if (ev.neuron == 1 && ev.t <= t) ++nj;
        const double m = nj - compensator(log, p, 1, t, 1e-10);
        sum += m;
        sum2 += m * m;
    }
    const double mean = sum / R;
    const double se = std::sqrt((sum2 / R - mean * mean) / R);
    CHECK(std::abs(mean) < 3.0 * se);
}

TEST_CASE("per-neuron event counts are stable in n") {
    const ModelParams& p = sigmoid_mexhat();
    std::vector<double> means, ses;
    for (int n : {8, 32, 128}) {
        const int R = 400;
        double sum = 0.0, sum2 = 0.0;
        for (int r = 0; r < R; ++r) {
            const EventLog log = simulate_hawkes(p, n, 1.0, derive_seed(3, 53, n, r));
            const double per = static_cast<double>(log.events.size()) / n;
            sum += per;
            sum2 += per * per;
        }
        const double mean = sum / R;
        means.push_back(mean);
        ses.push_back(std::sqrt((sum2 / R - mean * mean) / R));
    }
    for (std::size_t a = 0; a < means.size(); ++a)
        for (std::size_t b = a + 1; b < means.size(); ++b) {
            const double combined = std::sqrt(ses[a] * ses[a] + ses[b] * ses[b]);
            CHECK(std::abs(means[a] - means[b]) < 5.0 * combined);
        }
}

TEST_CASE("explosion guard raises a distinct error") {
    CHECK_THROWS_AS(simulate_hawkes(sigmoid_mexhat(), 32, 50.0, 1, 3), ExplosionError);
}

TEST_CASE("zero envelope ends the run without error") {
    const ModelParams p{FiringRate::constant(0.0), SynapticKernel::constant(0.0),
                        InitialCondition::constant(0.0), 1.0};
    const EventLog log = simulate_hawkes(p, 4, 5.0, 3);
    CHECK(log.events.empty());
}

TEST_CASE("event log csv round-trips") {
    const EventLog log = simulate_hawkes(sigmoid_mexhat(), 8, 2.0, 13);
    const auto dir = std::filesystem::temp_directory_path() / "hf_test_events";
    std::filesystem::create_directories(dir);
    const std::string csv = (dir / "events.csv").string();
    write_event_log_csv(log, sigmoid_mexhat(), csv, (dir / "events.meta").string());
    const EventLog back = read_event_log_csv(csv);
    REQUIRE(back.events.size() == log.events.size());
    for (std::size_t i = 0; i < log.events.size(); ++i) {
        CHECK(back.events[i].t == log.events[i].t);  // %.17g round-trips exactly
        CHECK(back.events[i].neuron == log.events[i].neuron);
    }
    const std::string meta = read_text_file((dir / "events.meta").string());
    CHECK(meta.find("params-hash") != std::string::npos);
}
