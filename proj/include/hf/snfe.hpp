#pragma once

#include <cstdint>
#include <vector>

#include "hf/gaussian_limit.hpp"
#include "hf/model.hpp"
#include "hf/nfe.hpp"

namespace hf {

// Mild-form solution of the stochastic neural field equation at noise
// amplitude n^{-1/2}, driven by a fixed white-noise realization.
struct SnfeSolution {
    SpaceTimeGrid grid;
    int n = 0;  // scaling parameter; 0 marks the drift-only (n = infinity) mode
    std::vector<double> values;  // (K+1) * G
    std::uint64_t noise_seed = 0;

    double at(int k, int g) const { return values[static_cast<std::size_t>(k) * grid.n_space + g]; }
};

// Exponential Euler-Maruyama with Ito (left endpoint) noise evaluation.
// Requires f.lower_bound() > 0. Deterministic given (params, n, noise).
SnfeSolution solve_snfe(const ModelParams& params, int n,
                        const WhiteNoiseGrid& noise);

// Drift-only reduction; reproduces euler_solve bit for bit.
SnfeSolution solve_snfe_drift_only(const ModelParams& params,
                                   const SpaceTimeGrid& grid);

// Grid Picard iteration for the mild form with the same fixed noise
// (trapezoid drift quadrature, identical Ito noise weights); independent
// cross-check of solve_snfe.
SnfeSolution picard_snfe(const ModelParams& params, int n,
                         const WhiteNoiseGrid& noise, int iters);

// Y^n = u + n^{-1/2} Gamma.
struct FirstOrderField {
    SpaceTimeGrid grid;
    int n = 0;
    std::vector<double> values;
    double at(int k, int g) const { return values[static_cast<std::size_t>(k) * grid.n_space + g]; }
};

FirstOrderField build_Yn(const Field& u, const LimitFluctuationField& gamma,
                         int n);

struct CoupledDefect {
    double sup_sq = 0.0;          // sup over the grid of (Y^n - V^n)^2
    std::uint64_t noise_checksum = 0;
};

// One coupled draw: a single white-noise grid drives M, Gamma (through the
// drift-consistent NFE solution) and the SNFE; returns the sup of the
// squared defect. Averaging over seeds estimates sup_{t,x} E[(D^n)^2].
CoupledDefect coupled_defect(const ModelParams& params, int n,
                             const SpaceTimeGrid& grid, std::uint64_t seed);

}  // namespace hf
