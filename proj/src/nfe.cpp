#include "hf/nfe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "hf/io.hpp"

namespace hf {

double Field::sup_abs() const {
    double m = 0.0;
    for (const double v : values) m = std::max(m, std::abs(v));
    return m;
}

std::vector<double> kernel_grid_table(const SynapticKernel& w,
                                      const SpaceTimeGrid& grid) {
    const int g_n = grid.n_space;
    std::vector<double> table(static_cast<std::size_t>(g_n) * g_n);
    for (int h = 0; h < g_n; ++h)
        for (int g = 0; g < g_n; ++g)
            table[static_cast<std::size_t>(h) * g_n + g] = w.eval(grid.y(h), grid.y(g));
    return table;
}

void nfe_drift_step(std::span<const double> w_table, const FiringRate& f,
                    double exp_a_dt, double dt, double dx,
                    std::span<const double> in, std::span<double> out,
                    std::span<double> f_scratch) {
    const int g_n = static_cast<int>(in.size());
    for (int h = 0; h < g_n; ++h) f_scratch[h] = f.eval(in[h]);
    for (int g = 0; g < g_n; ++g) {
        double s = 0.0;
        for (int h = 0; h < g_n; ++h) s += w_table[static_cast<std::size_t>(h) * g_n + g] * f_scratch[h];
        out[g] = exp_a_dt * (in[g] + dt * (s * dx));
    }
}

Field euler_solve(const ModelParams& params, const SpaceTimeGrid& grid) {
    const int g_n = grid.n_space, k_n = grid.n_time;
    const auto w_table = kernel_grid_table(params.w, grid);
    const double exp_a_dt = std::exp(-params.alpha * grid.dt());

    Field u;
    u.grid = grid;
    u.values.resize(static_cast<std::size_t>(k_n + 1) * g_n);
    for (int g = 0; g < g_n; ++g) u.values[g] = params.u0.eval(grid.y(g));

    std::vector<double> f_scratch(g_n);
    for (int k = 0; k < k_n; ++k) {
        auto in = std::span<const double>(u.values).subspan(
            static_cast<std::size_t>(k) * g_n, g_n);
        auto out = std::span<double>(u.values).subspan(
            static_cast<std::size_t>(k + 1) * g_n, g_n);
        nfe_drift_step(w_table, params.f, exp_a_dt, grid.dt(), grid.dx(), in,
                       out, f_scratch);
        for (const double v : out)
            if (!std::isfinite(v)) throw std::runtime_error("euler_solve: non-finite value");
    }
    return u;
}

namespace {

// h[k][g] = midpoint sum of w(y,x) f(v_k(y)) over the grid
void convolve_rate(const std::vector<double>& w_table, const FiringRate& f,
                   const SpaceTimeGrid& grid, const std::vector<double>& v,
                   std::vector<double>& h) {
    const int g_n = grid.n_space, k_n = grid.n_time;
    const double dx = grid.dx();
    std::vector<double> fv(g_n);
    for (int k = 0; k <= k_n; ++k) {
        const std::size_t off = static_cast<std::size_t>(k) * g_n;
        for (int g = 0; g < g_n; ++g) fv[g] = f.eval(v[off + g]);
        for (int g = 0; g < g_n; ++g) {
            double s = 0.0;
            for (int hh = 0; hh < g_n; ++hh)
                s += w_table[static_cast<std::size_t>(hh) * g_n + g] * fv[hh];
            h[off + g] = s * dx;
        }
    }
}

}  // namespace

Field picard_solve(const ModelParams& params, const SpaceTimeGrid& grid,
                   double tol, int max_iter) {
    if (!(tol > 0.0) || max_iter < 1)
        throw std::invalid_argument("picard_solve: need tol > 0, max_iter >= 1");
    const int g_n = grid.n_space, k_n = grid.n_time;
    const double dt = grid.dt();
    const double exp_a_dt = std::exp(-params.alpha * dt);
    const auto w_table = kernel_grid_table(params.w, grid);

    std::vector<double> u0v(g_n);
    for (int g = 0; g < g_n; ++g) u0v[g] = params.u0.eval(grid.y(g));

    const std::size_t total = static_cast<std::size_t>(k_n + 1) * g_n;
    std::vector<double> v(total), vn(total), h(total);
    for (int k = 0; k <= k_n; ++k)
        std::copy(u0v.begin(), u0v.end(), v.begin() + static_cast<std::size_t>(k) * g_n);

    double resid = 0.0;
    for (int iter = 0; iter < max_iter; ++iter) {
        convolve_rate(w_table, params.f, grid, v, h);
        // vn_k = e^{-alpha t_k} u0 + Q_k,  Q_{k+1} = e^{-a dt} Q_k + dt/2 (h_{k+1} + e^{-a dt} h_k)
        for (int g = 0; g < g_n; ++g) vn[g] = u0v[g];
        std::vector<double> q(g_n, 0.0);
        for (int k = 0; k < k_n; ++k) {
            const std::size_t off = static_cast<std::size_t>(k) * g_n;
            const std::size_t off1 = off + g_n;
            const double decay = std::exp(-params.alpha * grid.t(k + 1));
            for (int g = 0; g < g_n; ++g) {
                q[g] = exp_a_dt * q[g] + 0.5 * dt * (h[off1 + g] + exp_a_dt * h[off + g]);
                vn[off1 + g] = decay * u0v[g] + q[g];
            }
        }
        resid = 0.0;
        for (std::size_t idx = 0; idx < total; ++idx)
            resid = std::max(resid, std::abs(vn[idx] - v[idx]));
        v.swap(vn);
        if (resid < tol) {
            Field u;
            u.grid = grid;
            u.values = std::move(v);
            return u;
        }
    }
    throw ConvergenceError("picard_solve: no convergence after " +
                           std::to_string(max_iter) +
                           " iterations, last residual " + format_g17(resid));
}

double picard_residual(const ModelParams& params, const Field& v) {
    const SpaceTimeGrid& grid = v.grid;
    const int g_n = grid.n_space, k_n = grid.n_time;
    const double dt = grid.dt();
    const double exp_a_dt = std::exp(-params.alpha * dt);
    const auto w_table = kernel_grid_table(params.w, grid);
    std::vector<double> h(v.values.size());
    convolve_rate(w_table, params.f, grid, v.values, h);

    double resid = 0.0;
    std::vector<double> q(g_n, 0.0);
    for (int g = 0; g < g_n; ++g)
        resid = std::max(resid, std::abs(params.u0.eval(grid.y(g)) - v.at(0, g)));
    for (int k = 0; k < k_n; ++k) {
        const std::size_t off = static_cast<std::size_t>(k) * g_n;
        const std::size_t off1 = off + g_n;
        const double decay = std::exp(-params.alpha * grid.t(k + 1));
        for (int g = 0; g < g_n; ++g) {
            q[g] = exp_a_dt * q[g] + 0.5 * dt * (h[off1 + g] + exp_a_dt * h[off + g]);
            const double fx = decay * params.u0.eval(grid.y(g)) + q[g];
            resid = std::max(resid, std::abs(fx - v.values[off1 + g]));
        }
    }
    return resid;
}

void write_field_csv(const Field& field, const ModelParams& params,
                     const std::string& value_name, const std::string& csv_path,
                     const std::string& meta_path) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write " + csv_path);
    out << "# schema-version: " << kSchemaVersion << "\n";
    out << "t,x," << value_name << "\n";
    const SpaceTimeGrid& grid = field.grid;
    for (int k = 0; k <= grid.n_time; ++k)
        for (int g = 0; g < grid.n_space; ++g)
            out << format_g17(grid.t(k)) << "," << format_g17(grid.y(g)) << ","
                << format_g17(field.at(k, g)) << "\n";

    write_meta(meta_path,
               {{"schema-version", std::to_string(kSchemaVersion)},
                {"grid-space", std::to_string(grid.n_space)},
                {"grid-time", std::to_string(grid.n_time)},
                {"horizon", format_g17(grid.horizon)},
                {"params-hash", hash_hex(params.hash())}});
}

}  // namespace hf
