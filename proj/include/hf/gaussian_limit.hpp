#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hf/model.hpp"
#include "hf/nfe.hpp"

namespace hf {

// Discretized space-time white noise: xi[k][g] i.i.d. N(0,1); the measure of
// cell (k,g) is realized as xi * sqrt(dt dx).
struct WhiteNoiseGrid {
    SpaceTimeGrid grid;
    std::vector<double> xi;  // K * G
    std::uint64_t seed = 0;
    std::uint64_t checksum = 0;

    double at(int k, int g) const { return xi[static_cast<std::size_t>(k) * grid.n_space + g]; }
};

WhiteNoiseGrid sample_white_noise(const SpaceTimeGrid& grid, std::uint64_t seed);
WhiteNoiseGrid zero_noise(const SpaceTimeGrid& grid);

// Discrete path of the limit Gaussian martingale M_t(x); values[0] = 0 and
//   M_{k+1}(y_g) = M_k(y_g) + e^{alpha t_k} sum_h w(y_h,y_g) sqrt(f(u_k(y_h))) xi[k][h] sqrt(dt dx).
struct GaussianPathM {
    SpaceTimeGrid grid;
    std::vector<double> values;  // (K+1) * G
    double at(int k, int g) const { return values[static_cast<std::size_t>(k) * grid.n_space + g]; }
};

GaussianPathM simulate_M(const Field& u, const ModelParams& params,
                         const WhiteNoiseGrid& noise);

// E[M_{t1}(phi1) M_{t2}(phi2)] = int_0^{t1^t2} int_0^1 e^{2 alpha s}
//   I[phi1](y) I[phi2](y) f(u(s,y)) dy ds, Simpson in space (with u
// interpolated to the closed Simpson nodes), trapezoid in time.
double covariance_M(const TestFunction& phi1, const TestFunction& phi2,
                    double t1, double t2, const Field& u,
                    const ModelParams& params, int quad_points = 256);

// Solution of the limit fluctuation equation driven by M.
struct LimitFluctuationField {
    SpaceTimeGrid grid;
    std::vector<double> values;  // (K+1) * G
    double at(int k, int g) const { return values[static_cast<std::size_t>(k) * grid.n_space + g]; }
    std::span<const double> row(int k) const {
        return {values.data() + static_cast<std::size_t>(k) * grid.n_space,
                static_cast<std::size_t>(grid.n_space)};
    }
};

LimitFluctuationField solve_limit_gamma(const GaussianPathM& m, const Field& u,
                                        const ModelParams& params);

// Midpoint-rule projection sum_g phi(y_g) row[g] dx of a field row at a
// grid time.
double project(const SpaceTimeGrid& grid, std::span<const double> row,
               const TestFunction& phi);

template <class FieldLike>
double project(const FieldLike& field, const TestFunction& phi, double t) {
    const int k = field.grid.time_index(t);
    return project(field.grid,
                   std::span<const double>(field.values)
                       .subspan(static_cast<std::size_t>(k) * field.grid.n_space,
                                field.grid.n_space),
                   phi);
}

// same CSV layout as Field: t,x,<value_name> plus a metadata sidecar
void write_path_csv(const GaussianPathM& m, const ModelParams& params,
                    const std::string& csv_path, const std::string& meta_path);
void write_path_csv(const LimitFluctuationField& gamma, const ModelParams& params,
                    const std::string& csv_path, const std::string& meta_path);

}  // namespace hf
