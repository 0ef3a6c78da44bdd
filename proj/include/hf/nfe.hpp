#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hf/model.hpp"

namespace hf {

// u(t_k, y_g) on the grid, row-major in k.
struct Field {
    SpaceTimeGrid grid;
    std::vector<double> values;  // (K+1) * G

    double at(int k, int g) const { return values[static_cast<std::size_t>(k) * grid.n_space + g]; }
    std::span<const double> row(int k) const {
        return {values.data() + static_cast<std::size_t>(k) * grid.n_space,
                static_cast<std::size_t>(grid.n_space)};
    }
    double sup_abs() const;
};

struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Kernel values on the grid midpoints, W(h, g) = w(y_h, y_g).
std::vector<double> kernel_grid_table(const SynapticKernel& w,
                                      const SpaceTimeGrid& grid);

// One exponential-Euler step of the drift part,
//   out_g = e^{-alpha dt} (in_g + dt * sum_h W(h,g) f(in_h) dx).
// The stochastic solver reuses this verbatim so that its zero-noise mode
// reproduces euler_solve bit for bit.
void nfe_drift_step(std::span<const double> w_table, const FiringRate& f,
                    double exp_a_dt, double dt, double dx,
                    std::span<const double> in, std::span<double> out,
                    std::span<double> f_scratch);

// Picard iteration on the fixed-point map
//   F(v)_t(x) = e^{-alpha t} u0(x) + int_0^t e^{-alpha(t-s)} int w(y,x) f(v_s(y)) dy ds,
// trapezoid in s, midpoint sum in y, starting from v0_t = u0. Stops when
// successive iterates differ by < tol in grid sup-norm.
Field picard_solve(const ModelParams& params, const SpaceTimeGrid& grid,
                   double tol = 1e-10, int max_iter = 200);

// Exponential Euler time stepping of the NFE.
Field euler_solve(const ModelParams& params, const SpaceTimeGrid& grid);

// sup-norm of v - F(v) for a given grid field (fixed-point residual)
double picard_residual(const ModelParams& params, const Field& v);

void write_field_csv(const Field& field, const ModelParams& params,
                     const std::string& value_name, const std::string& csv_path,
                     const std::string& meta_path);

}  // namespace hf
