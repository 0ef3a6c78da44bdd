#include "hf/gaussian_limit.hpp"

#include <cmath>
#include <stdexcept>

#include "hf/quad.hpp"
#include "hf/rng.hpp"

namespace hf {

WhiteNoiseGrid sample_white_noise(const SpaceTimeGrid& grid, std::uint64_t seed) {
    WhiteNoiseGrid noise;
    noise.grid = grid;
    noise.seed = seed;
    noise.xi.resize(static_cast<std::size_t>(grid.n_time) * grid.n_space);
    Rng rng(seed);
    for (double& v : noise.xi) v = rng.normal();
    noise.checksum = fnv1a64(noise.xi);
    return noise;
}

WhiteNoiseGrid zero_noise(const SpaceTimeGrid& grid) {
    WhiteNoiseGrid noise;
    noise.grid = grid;
    noise.xi.assign(static_cast<std::size_t>(grid.n_time) * grid.n_space, 0.0);
    noise.checksum = fnv1a64(noise.xi);
    return noise;
}

GaussianPathM simulate_M(const Field& u, const ModelParams& params,
                         const WhiteNoiseGrid& noise) {
    if (!(u.grid == noise.grid))
        throw std::invalid_argument("simulate_M: field and noise must share the grid");
    if (fnv1a64(noise.xi) != noise.checksum)
        throw std::logic_error("simulate_M: noise checksum mismatch");
    const SpaceTimeGrid& grid = u.grid;
    const int g_n = grid.n_space, k_n = grid.n_time;
    const double root_dtdx = std::sqrt(grid.dt() * grid.dx());
    const auto w_table = kernel_grid_table(params.w, grid);

    GaussianPathM m;
    m.grid = grid;
    m.values.assign(static_cast<std::size_t>(k_n + 1) * g_n, 0.0);

    std::vector<double> a(g_n);
    for (int k = 0; k < k_n; ++k) {
        const double growth = std::exp(params.alpha * grid.t(k));
        const std::size_t noff = static_cast<std::size_t>(k) * g_n;
        for (int h = 0; h < g_n; ++h) {
            const double fu = params.f.eval(u.at(k, h));
            a[h] = growth * std::sqrt(fu) * noise.xi[noff + h] * root_dtdx;
        }
        const std::size_t off = static_cast<std::size_t>(k) * g_n;
        for (int g = 0; g < g_n; ++g) {
            double s = 0.0;
            for (int h = 0; h < g_n; ++h)
                s += w_table[static_cast<std::size_t>(h) * g_n + g] * a[h];
            const double v = m.values[off + g] + s;
            if (!std::isfinite(v)) throw std::runtime_error("simulate_M: non-finite value");
            m.values[off + g_n + g] = v;
        }
    }
    return m;
}

double covariance_M(const TestFunction& phi1, const TestFunction& phi2,
                    double t1, double t2, const Field& u,
                    const ModelParams& params, int quad_points) {
    const SpaceTimeGrid& grid = u.grid;
    const int k_end = grid.time_index(std::min(t1, t2));
    const int m = 2 * grid.n_space;  // Simpson panels in space
    std::vector<double> node(m + 1), i1(m + 1), i2(m + 1), sw(m + 1);
    for (int j = 0; j <= m; ++j) {
        node[j] = static_cast<double>(j) / m;
        i1[j] = eval_I(phi1, params.w, node[j], quad_points);
        i2[j] = eval_I(phi2, params.w, node[j], quad_points);
        sw[j] = (j == 0 || j == m) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
        sw[j] *= (1.0 / m) / 3.0;
    }

    // space integral at each grid time, then trapezoid in s
    double acc = 0.0;
    double prev = 0.0;
    for (int k = 0; k <= k_end; ++k) {
        const auto row = u.row(k);
        const double growth = std::exp(2.0 * params.alpha * grid.t(k));
        double space = 0.0;
        for (int j = 0; j <= m; ++j) {
            const double uy = interp_midpoint_cubic(row, node[j]);
            space += sw[j] * i1[j] * i2[j] * params.f.eval(uy);
        }
        space *= growth;
        if (k > 0) acc += 0.5 * grid.dt() * (prev + space);
        prev = space;
    }
    return acc;
}

LimitFluctuationField solve_limit_gamma(const GaussianPathM& m, const Field& u,
                                        const ModelParams& params) {
    if (!(u.grid == m.grid))
        throw std::invalid_argument("solve_limit_gamma: field and M must share the grid");
    const SpaceTimeGrid& grid = u.grid;
    const int g_n = grid.n_space, k_n = grid.n_time;
    const double dt = grid.dt(), dx = grid.dx();
    const double exp_a_dt = std::exp(-params.alpha * dt);
    const auto w_table = kernel_grid_table(params.w, grid);

    LimitFluctuationField gam;
    gam.grid = grid;
    gam.values.assign(static_cast<std::size_t>(k_n + 1) * g_n, 0.0);

    std::vector<double> b(g_n);
    for (int k = 0; k < k_n; ++k) {
        const std::size_t off = static_cast<std::size_t>(k) * g_n;
        for (int h = 0; h < g_n; ++h)
            b[h] = params.f.deriv(u.at(k, h)) * gam.values[off + h];
        const double mdecay = std::exp(-params.alpha * grid.t(k + 1));
        for (int g = 0; g < g_n; ++g) {
            double drift = 0.0;
            for (int h = 0; h < g_n; ++h)
                drift += w_table[static_cast<std::size_t>(h) * g_n + g] * b[h];
            const double v =
                exp_a_dt * (gam.values[off + g] + dt * (drift * dx)) +
                mdecay * (m.values[off + g_n + g] - m.values[off + g]);
            if (!std::isfinite(v))
                throw std::runtime_error("solve_limit_gamma: non-finite value");
            gam.values[off + g_n + g] = v;
        }
    }
    return gam;
}

double project(const SpaceTimeGrid& grid, std::span<const double> row,
               const TestFunction& phi) {
    double acc = 0.0;
    for (int g = 0; g < grid.n_space; ++g) acc += phi.eval(grid.y(g)) * row[g];
    return acc * grid.dx();
}

void write_path_csv(const GaussianPathM& m, const ModelParams& params,
                    const std::string& csv_path, const std::string& meta_path) {
    Field view{m.grid, m.values};
    write_field_csv(view, params, "M", csv_path, meta_path);
}

void write_path_csv(const LimitFluctuationField& gamma, const ModelParams& params,
                    const std::string& csv_path, const std::string& meta_path) {
    Field view{gamma.grid, gamma.values};
    write_field_csv(view, params, "gamma", csv_path, meta_path);
}

}  // namespace hf
