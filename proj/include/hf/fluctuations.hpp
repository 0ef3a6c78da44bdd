#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "hf/hawkes.hpp"
#include "hf/model.hpp"
#include "hf/nfe.hpp"

namespace hf {

// eta^i_t = sqrt(n) (U^i_t - u(t, x_i)); u is interpolated from the cell
// midpoints to the neuron positions. t must be a grid time of u.
std::vector<double> compute_eta(const EventLog& log, const Field& u,
                                const ModelParams& params, double t);

struct FluctuationSample {
    double t = 0.0;
    std::vector<double> eta;
    std::map<std::string, double> gamma;  // label -> Gamma^n_t(phi)
};

// eta plus Gamma^n_t(phi) = n^-1 sum_i eta_i phi(x_i) for each phi; the
// gamma accumulation deliberately runs in reverse index order so the
// definitional identity is checked through a distinct summation path.
FluctuationSample fluctuation_sample(const EventLog& log, const Field& u,
                                     const ModelParams& params, double t,
                                     std::span<const TestFunction> phis);

// eta^i = A^i + B^i + C^i of the fluctuation decomposition:
//   A: stochastic integral against dM^j (jump sum minus compensator part),
//   B: time integral of f(U^j) - f(u(.,x_j)),
//   C: deterministic Riemann-gap term.
struct Decomposition {
    double t = 0.0;
    std::vector<double> a, b, c;
};

Decomposition decompose(const EventLog& log, const Field& u,
                        const ModelParams& params, double t,
                        double quad_tol = 1e-12);

// M^n_t(phi) = n^{-1/2} sum_j int_0^t e^{alpha s} I^n[phi](x_j) dM^j_s.
double martingale_Mn(const EventLog& log, const ModelParams& params,
                     const TestFunction& phi, double t, double quad_tol = 1e-10);

// <M^n(phi1), M^n(phi2)>_t
//   = n^-1 sum_j int_0^t e^{2 alpha s} I^n[phi1](x_j) I^n[phi2](x_j) f(U^j_s) ds.
double angle_bracket(const EventLog& log, const ModelParams& params,
                     const TestFunction& phi1, const TestFunction& phi2,
                     double t, double quad_tol = 1e-10);

// Batch versions sharing one compensator sweep across the registered family.
std::vector<double> martingale_Mn_all(const EventLog& log, const ModelParams& params,
                                      std::span<const TestFunction> phis, double t,
                                      double quad_tol = 1e-10);
std::vector<double> angle_bracket_diag(const EventLog& log, const ModelParams& params,
                                       std::span<const TestFunction> phis, double t,
                                       double quad_tol = 1e-10);

// M^n_t(phi) and <M^n(phi)>_t together from a single compensator sweep
// carrying both exponential weights.
struct MartingaleProbes {
    std::vector<double> mn;       // per phi
    std::vector<double> bracket;  // per phi
};
MartingaleProbes martingale_probes(const EventLog& log, const ModelParams& params,
                                   std::span<const TestFunction> phis, double t,
                                   double quad_tol = 1e-10);

struct CTermFit {
    std::vector<double> sup_values;  // sup_t |C^n_t(phi)| per n
    double slope = 0.0;
    double stderr = 0.0;
    bool degenerate = false;  // all values indistinguishable from zero
};

// Deterministic Riemann-gap diagnostic: sup_t |C^n_t(phi)| for each n and
// the fitted log-log slope. No simulation involved.
CTermFit c_term_bound_check(const ModelParams& params, const Field& u,
                            const TestFunction& phi, std::span<const int> n_list);

}  // namespace hf
