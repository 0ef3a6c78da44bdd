#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "hf/gaussian_limit.hpp"
#include "hf/io.hpp"
#include "hf/rng.hpp"
#include "hf/stats.hpp"
#include "oracles.hpp"

using namespace hf;

namespace {

const ModelParams& sigmoid_mexhat() {
    static const ModelParams p =
        load_model_config(std::string(HF_SOURCE_DIR) + "/configs/sigmoid_mexhat.cfg");
    return p;
}

// closed-form covariance of the discrete martingale path:
//   sum_k dt e^{2 alpha t_k} sum_h (Wphi_h)(Wpsi_h) f(u(t_k,y_h)) dx
// with Wphi_h = sum_g w(y_h,y_g) phi(y_g) dx; exact for simulate_M output.
double discrete_cov(const Field& u, const ModelParams& p, const TestFunction& phi,
                    const TestFunction& psi, double t1, double t2) {
    const SpaceTimeGrid& grid = u.grid;
    const int g_n = grid.n_space;
    const int k_end = grid.time_index(std::min(t1, t2));
    std::vector<double> wphi(g_n, 0.0), wpsi(g_n, 0.0);
    for (int h = 0; h < g_n; ++h)
        for (int g = 0; g < g_n; ++g) {
            wphi[h] += p.w.eval(grid.y(h), grid.y(g)) * phi.eval(grid.y(g)) * grid.dx();
            wpsi[h] += p.w.eval(grid.y(h), grid.y(g)) * psi.eval(grid.y(g)) * grid.dx();
        }
    double acc = 0.0;
    for (int k = 0; k < k_end; ++k) {
        const double growth = std::exp(2.0 * p.alpha * grid.t(k));
        for (int h = 0; h < g_n; ++h)
            acc += growth * wphi[h] * wpsi[h] * p.f.eval(u.at(k, h)) * grid.dt() *
                   grid.dx();
    }
    return acc;
}

}  // namespace

TEST_CASE("white noise sampling is deterministic and seed sensitive") {
    const SpaceTimeGrid grid(16, 32, 1.0);
    const WhiteNoiseGrid a = sample_white_noise(grid, 5);
    const WhiteNoiseGrid b = sample_white_noise(grid, 5);
    const WhiteNoiseGrid c = sample_white_noise(grid, 6);
    CHECK(a.xi == b.xi);
    CHECK(a.checksum == b.checksum);
    CHECK(a.xi != c.xi);
}

TEST_CASE("white noise cells have standard normal moments") {
    const SpaceTimeGrid grid(1000, 1000, 1.0);
    const WhiteNoiseGrid noise = sample_white_noise(grid, 31);
    const double m = 1e6;
    double sum = 0.0, sum2 = 0.0;
    for (const double v : noise.xi) {
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / m;
    const double var = sum2 / m - mean * mean;
    CHECK(std::abs(mean) < 3.0 / std::sqrt(m));
    CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / m));
}

TEST_CASE("disjoint cell regions are uncorrelated") {
    const SpaceTimeGrid grid(8, 8, 1.0);
    const int R = 2000;
    double sa = 0.0, sb = 0.0, sab = 0.0, sa2 = 0.0, sb2 = 0.0;
    for (int r = 0; r < R; ++r) {
        const WhiteNoiseGrid noise = sample_white_noise(grid, derive_seed(8, 70, 0, r));
        double a = 0.0, b = 0.0;
        for (int k = 0; k < 4; ++k)
            for (int g = 0; g < 8; ++g) a += noise.at(k, g);
        for (int k = 4; k < 8; ++k)
            for (int g = 0; g < 8; ++g) b += noise.at(k, g);
        sa += a; sb += b; sab += a * b; sa2 += a * a; sb2 += b * b;
    }
    const double cov = sab / R - (sa / R) * (sb / R);
    const double va = sa2 / R - (sa / R) * (sa / R);
    const double vb = sb2 / R - (sb / R) * (sb / R);
    CHECK(std::abs(cov) < 3.0 * std::sqrt(va * vb / R));
}

TEST_CASE("zero rate gives an identically zero martingale") {
    const ModelParams p{FiringRate::constant(0.0), SynapticKernel::constant(1.0),
                        InitialCondition::constant(0.0), 1.0};
    const SpaceTimeGrid grid(8, 16, 1.0);
    const Field u = euler_solve(p, grid);
    const GaussianPathM m = simulate_M(u, p, sample_white_noise(grid, 3));
    for (const double v : m.values) CHECK(v == 0.0);
}

TEST_CASE("flat configuration: Var M_t(x) = c t") {
    const ModelParams p{FiringRate::constant(0.5), SynapticKernel::constant(1.0),
                        InitialCondition::constant(0.0), 0.0};
    const SpaceTimeGrid grid(16, 32, 1.0);
    const Field u = euler_solve(p, grid);
    const int R = 2000;
    RunningMoments stats;
    for (int r = 0; r < R; ++r) {
        const GaussianPathM m =
            simulate_M(u, p, sample_white_noise(grid, derive_seed(4, 71, 0, r)));
        stats.add(m.at(grid.n_time, 5));
    }
    CHECK(std::abs(stats.mean()) < 3.0 * stats.se_mean());
    CHECK(std::abs(stats.variance() - 0.5) < 3.0 * stats.se_variance());
}

TEST_CASE("simulated covariance matches the discrete closed form") {
    const ModelParams& p = sigmoid_mexhat();
    const SpaceTimeGrid grid(32, 64, 1.0);
    const Field u = picard_solve(p, grid);
    const TestFunction& phi = test_function("expx");
    const TestFunction& psi = test_function("x");
    const int R = 2000;
    double s1 = 0.0, s2 = 0.0, s12 = 0.0, q1 = 0.0, q2 = 0.0;
    for (int r = 0; r < R; ++r) {
        const GaussianPathM m =
            simulate_M(u, p, sample_white_noise(grid, derive_seed(12, 72, 0, r)));
        const double a = project(m, phi, 0.5);
        const double b = project(m, psi, 1.0);
        s1 += a; s2 += b; s12 += a * b; q1 += a * a; q2 += b * b;
    }
    const double cov_hat = s12 / R - (s1 / R) * (s2 / R);
    const double va = q1 / R - (s1 / R) * (s1 / R);
    const double vb = q2 / R - (s2 / R) * (s2 / R);
    const double target = discrete_cov(u, p, phi, psi, 0.5, 1.0);
    // SE of a covariance estimator ~ sqrt((va vb + cov^2)/R)
    const double se = std::sqrt((va * vb + cov_hat * cov_hat) / R);
    CHECK(std::abs(cov_hat - target) < 3.0 * se);

    // and the discrete closed form approaches the limit quadrature
    const double lim = covariance_M(phi, psi, 0.5, 1.0, u, p);
    CHECK(std::abs(target - lim) <
          (grid.dt() + grid.dx() * grid.dx()) * 5.0 * std::abs(lim) + 1e-6);
}

TEST_CASE("covariance quadrature reproduces a closed-form integral") {
    // alpha = 1, f = 2, w = 1, phi = 1, t = 1: int_0^1 2 e^{2s} ds = e^2 - 1
    const ModelParams p{FiringRate::constant(2.0), SynapticKernel::constant(1.0),
                        InitialCondition::constant(0.0), 1.0};
    const SpaceTimeGrid grid(8, 40000, 1.0);
    const Field u = euler_solve(p, grid);
    const double cov =
        covariance_M(test_function("one"), test_function("one"), 1.0, 1.0, u, p);
    CHECK(std::abs(cov - 6.3890560989306495) < 1e-8);
}

TEST_CASE("covariance is symmetric, bilinear, nonnegative, nondecreasing") {
    const ModelParams& p = sigmoid_mexhat();
    const SpaceTimeGrid grid(32, 64, 1.0);
    const Field u = picard_solve(p, grid);
    const TestFunction& pa = test_function("expx");
    const TestFunction& pb = test_function("x2");
    CHECK(covariance_M(pa, pb, 0.5, 1.0, u, p) ==
          doctest::Approx(covariance_M(pb, pa, 1.0, 0.5, u, p)).epsilon(1e-13));
    const double lhs = covariance_M(add(scale(pa, 2.0), scale(pb, -1.0)), pb, 1.0, 1.0, u, p);
    const double rhs = 2.0 * covariance_M(pa, pb, 1.0, 1.0, u, p) -
                       covariance_M(pb, pb, 1.0, 1.0, u, p);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
    const double v_half = covariance_M(pa, pa, 0.5, 0.5, u, p);
    const double v_one = covariance_M(pa, pa, 1.0, 1.0, u, p);
    CHECK(v_half >= 0.0);
    CHECK(v_one >= v_half);
    // zero test function
    CHECK(covariance_M(scale(pa, 0.0), pa, 1.0, 1.0, u, p) == 0.0);
}

TEST_CASE("constant rate: gamma telescopes to e^{-alpha t} M_t") {
    const ModelParams p{FiringRate::constant(0.8), SynapticKernel::mexican_hat(0.8, 2.0),
                        InitialCondition::smoothstep(1.0), 1.0};
    const SpaceTimeGrid grid(32, 128, 1.0);
    const Field u = euler_solve(p, grid);
    const GaussianPathM m = simulate_M(u, p, sample_white_noise(grid, 77));
    const LimitFluctuationField gam = solve_limit_gamma(m, u, p);
    for (int k = 0; k <= grid.n_time; ++k)
        for (int g = 0; g < grid.n_space; ++g) {
            const double expect = std::exp(-p.alpha * grid.t(k)) * m.at(k, g);
            CHECK(std::abs(gam.at(k, g) - expect) <= 1e-12);
        }
}

TEST_CASE("zero noise gives an identically zero gamma") {
    const ModelParams& p = sigmoid_mexhat();
    const SpaceTimeGrid grid(16, 32, 1.0);
    const Field u = euler_solve(p, grid);
    const GaussianPathM m = simulate_M(u, p, zero_noise(grid));
    const LimitFluctuationField gam = solve_limit_gamma(m, u, p);
    for (const double v : gam.values) CHECK(v == 0.0);
}

TEST_CASE("gamma satisfies the weak-form limit equation to O(dt)") {
    const ModelParams& p = sigmoid_mexhat();
    const int g_n = 64;
    std::vector<double> dts, sups;
    for (int K : {32, 64, 128}) {
        const SpaceTimeGrid grid(g_n, K, 1.0);
        const Field u = picard_solve(p, grid);
        // I[phi](y_g) once per phi on this grid
        const TestFunction& phi = test_function("expx");
        std::vector<double> iphi(g_n);
        for (int g = 0; g < g_n; ++g) iphi[g] = eval_I(phi, p.w, grid.y(g), 256);
        double sup = 0.0;
        const int seeds = 20;
        for (int s = 0; s < seeds; ++s) {
            const GaussianPathM m =
                simulate_M(u, p, sample_white_noise(grid, derive_seed(3, 73, K, s)));
            const LimitFluctuationField gam = solve_limit_gamma(m, u, p);
            // residual of Gamma_t(phi) = e^{-at} M_t(phi) + int_0^t e^{-a(t-s)} Gamma_s(psi_s) ds
            std::vector<double> drift(grid.n_time + 1);
            for (int k = 0; k <= grid.n_time; ++k) {
                double acc = 0.0;
                for (int g = 0; g < g_n; ++g)
                    acc += iphi[g] * p.f.deriv(u.at(k, g)) * gam.at(k, g) * grid.dx();
                drift[k] = acc;
            }
            double q = 0.0;
            const double ead = std::exp(-p.alpha * grid.dt());
            for (int k = 1; k <= grid.n_time; ++k) {
                q = ead * q + 0.5 * grid.dt() * (drift[k] + ead * drift[k - 1]);
                const double resid = project(gam, phi, grid.t(k)) -
                                     std::exp(-p.alpha * grid.t(k)) *
                                         project(m, phi, grid.t(k)) -
                                     q;
                sup = std::max(sup, std::abs(resid));
            }
        }
        dts.push_back(1.0 / K);
        sups.push_back(sup / seeds);
    }
    const SlopeFit fit = fit_loglog_slope(dts, sups);
    INFO("sup residuals ", sups[0], " ", sups[1], " ", sups[2], " slope ", fit.slope);
    CHECK(std::abs(fit.slope - 1.0) <= 0.2);
    CHECK(sups[2] <= 20.0 * dts[2]);  // residual <= C dt with a moderate constant
}

TEST_CASE("martingale increments are uncorrelated with the past") {
    const ModelParams& p = sigmoid_mexhat();
    const SpaceTimeGrid grid(32, 64, 1.0);
    const Field u = picard_solve(p, grid);
    const TestFunction& phi = test_function("x");
    const int R = 2000;
    double s1 = 0.0, s2 = 0.0, s12 = 0.0, q1 = 0.0, q2 = 0.0;
    for (int r = 0; r < R; ++r) {
        const GaussianPathM m =
            simulate_M(u, p, sample_white_noise(grid, derive_seed(6, 74, 0, r)));
        const double past = project(m, phi, 0.5);
        const double inc = project(m, phi, 1.0) - past;
        s1 += past; s2 += inc; s12 += past * inc; q1 += past * past; q2 += inc * inc;
    }
    const double cov = s12 / R - (s1 / R) * (s2 / R);
    const double va = q1 / R - (s1 / R) * (s1 / R);
    const double vb = q2 / R - (s2 / R) * (s2 / R);
    CHECK(std::abs(cov) < 3.0 * std::sqrt((va * vb + cov * cov) / R));
}

TEST_CASE("projected martingale is gaussian") {
    const ModelParams& p = sigmoid_mexhat();
    const SpaceTimeGrid grid(32, 64, 1.0);
    const Field u = picard_solve(p, grid);
    const TestFunction& phi = test_function("expx");
    const int R = 2000;
    std::vector<double> samples;
    samples.reserve(R);
    for (int r = 0; r < R; ++r) {
        const GaussianPathM m =
            simulate_M(u, p, sample_white_noise(grid, derive_seed(14, 75, 0, r)));
        samples.push_back(project(m, phi, 1.0));
    }
    const double sd = std::sqrt(discrete_cov(u, p, phi, phi, 1.0, 1.0));
    const KsResult ks = ks_normal_test(samples, 0.0, sd);
    INFO("KS D ", ks.d, " p ", ks.p);
    CHECK(ks.p > 0.01);
}

TEST_CASE("projection is linear and exact on trivial cases") {
    const SpaceTimeGrid grid(16, 4, 1.0);
    LimitFluctuationField f1;
    f1.grid = grid;
    f1.values.assign(static_cast<std::size_t>(grid.n_time + 1) * grid.n_space, 1.0);
    CHECK(project(f1, test_function("one"), 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(project(f1, scale(test_function("one"), 0.0), 1.0) == 0.0);

    Rng rng(55);
    LimitFluctuationField fr = f1;
    for (double& v : fr.values) v = rng.normal();
    const TestFunction& pa = test_function("sin2pi");
    const TestFunction& pb = test_function("x2");
    const double lhs = project(fr, add(scale(pa, 3.0), scale(pb, -2.0)), 0.5);
    const double rhs = 3.0 * project(fr, pa, 0.5) - 2.0 * project(fr, pb, 0.5);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
}

TEST_CASE("limit fields serialize like fields") {
    const ModelParams& p = sigmoid_mexhat();
    const SpaceTimeGrid grid(8, 4, 1.0);
    const Field u = euler_solve(p, grid);
    const GaussianPathM m = simulate_M(u, p, sample_white_noise(grid, 2));
    const LimitFluctuationField gam = solve_limit_gamma(m, u, p);
    const auto dir = std::filesystem::temp_directory_path() / "hf_test_paths";
    std::filesystem::create_directories(dir);
    write_path_csv(m, p, (dir / "m.csv").string(), (dir / "m.meta").string());
    write_path_csv(gam, p, (dir / "g.csv").string(), (dir / "g.meta").string());
    const std::string mc = read_text_file((dir / "m.csv").string());
    const std::string gc = read_text_file((dir / "g.csv").string());
    CHECK(mc.find("t,x,M") != std::string::npos);
    CHECK(gc.find("t,x,gamma") != std::string::npos);
    CHECK(read_text_file((dir / "m.meta").string()).find("params-hash") !=
          std::string::npos);
}

TEST_CASE("grid mismatch and checksum corruption are rejected") {
    const ModelParams& p = sigmoid_mexhat();
    const SpaceTimeGrid grid(16, 32, 1.0);
    const Field u = euler_solve(p, grid);
    WhiteNoiseGrid noise = sample_white_noise(SpaceTimeGrid(16, 64, 1.0), 1);
    CHECK_THROWS_AS(simulate_M(u, p, noise), std::invalid_argument);
    WhiteNoiseGrid bad = sample_white_noise(grid, 1);
    bad.xi[0] += 1.0;
    CHECK_THROWS_AS(simulate_M(u, p, bad), std::logic_error);
}
