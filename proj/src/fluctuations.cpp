#include "hf/fluctuations.hpp"

#include <cmath>
#include <stdexcept>

#include "hf/quad.hpp"
#include "hf/stats.hpp"

namespace hf {

std::vector<double> compute_eta(const EventLog& log, const Field& u,
                                const ModelParams& params, double t) {
    const int k = u.grid.time_index(t);  // rejects off-grid t
    const auto pot = potentials_at(log, params, t);
    const auto row = u.row(k);
    const double root_n = std::sqrt(static_cast<double>(log.n));
    std::vector<double> eta(log.n);
    for (int i = 1; i <= log.n; ++i) {
        const double xi = static_cast<double>(i) / log.n;
        eta[i - 1] = root_n * (pot[i - 1] - interp_midpoint_cubic(row, xi));
    }
    return eta;
}

FluctuationSample fluctuation_sample(const EventLog& log, const Field& u,
                                     const ModelParams& params, double t,
                                     std::span<const TestFunction> phis) {
    FluctuationSample sample;
    sample.t = t;
    sample.eta = compute_eta(log, u, params, t);
    const int n = log.n;
    for (const TestFunction& phi : phis) {
        double acc = 0.0;
        for (int i = n; i >= 1; --i)
            acc += sample.eta[i - 1] * phi.eval(static_cast<double>(i) / n);
        sample.gamma[phi.label] = acc / n;
    }
    return sample;
}

Decomposition decompose(const EventLog& log, const Field& u,
                        const ModelParams& params, double t, double quad_tol) {
    const SpaceTimeGrid& grid = u.grid;
    const int k_t = grid.time_index(t);
    const int n = log.n;
    const double alpha = params.alpha;
    const double root_n = std::sqrt(static_cast<double>(n));
    const double decay_t = std::exp(-alpha * t);
    const KernelTable table(params.w, n);

    // int_0^t e^{alpha s} f(U^j_s) ds, per neuron
    const std::vector<double> w_comp =
        weighted_compensators(log, params, alpha, t, quad_tol);

    // int_0^t e^{alpha s} f(u(s, x_j)) ds over the grid rows with composite
    // Simpson (so that B vanishes to quadrature precision for constant f);
    // the same values feed both B and the g-part of C, which is what makes
    // those two cancel exactly in the decomposition identity.
    const double dt = grid.dt();
    std::vector<double> row_weights(k_t + 1, 0.0);
    if (k_t >= 1) {
        const int m = (k_t % 2 == 0) ? k_t : k_t - 1;
        if (m >= 2) {
            row_weights[0] += dt / 3.0;
            row_weights[m] += dt / 3.0;
            for (int k = 1; k < m; ++k)
                row_weights[k] += (k % 2 == 1 ? 4.0 : 2.0) * dt / 3.0;
        }
        if (m < k_t) {  // trailing odd panel by trapezoid
            row_weights[k_t - 1] += 0.5 * dt;
            row_weights[k_t] += 0.5 * dt;
        }
    }
    std::vector<double> v_comp(n, 0.0);
    for (int k = 0; k <= k_t; ++k) {
        if (row_weights[k] == 0.0) continue;
        const auto row = u.row(k);
        const double growth = std::exp(alpha * grid.t(k));
        for (int j = 1; j <= n; ++j)
            v_comp[j - 1] += row_weights[k] * growth *
                             params.f.eval(interp_midpoint_cubic(
                                 row, static_cast<double>(j) / n));
    }

    // jump sums J_i = sum_{events <= t} e^{alpha s} w(x_j, x_i)
    std::vector<double> jumps(n, 0.0);
    for (const Event& ev : log.events) {
        if (ev.t > t) break;
        const double growth = std::exp(alpha * ev.t);
        for (int i = 1; i <= n; ++i) jumps[i - 1] += growth * table(ev.neuron, i);
    }

    // Riemann reference: R_k(x_i) = sum_h w(y_h, x_i) f(u(t_k, y_h)) dx,
    // the midpoint sum consistent with the NFE discretization.
    const int g_n = grid.n_space;
    std::vector<double> wg(static_cast<std::size_t>(g_n) * n);
    for (int h = 0; h < g_n; ++h)
        for (int i = 1; i <= n; ++i)
            wg[static_cast<std::size_t>(h) * n + (i - 1)] =
                params.w.eval(grid.y(h), static_cast<double>(i) / n);
    std::vector<double> ref(n, 0.0), r_prev(n), r_cur(n), fu(g_n);
    for (int k = 0; k <= k_t; ++k) {
        const double growth = std::exp(alpha * grid.t(k));
        for (int h = 0; h < g_n; ++h) fu[h] = params.f.eval(u.at(k, h));
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int h = 0; h < g_n; ++h)
                s += wg[static_cast<std::size_t>(h) * n + i] * fu[h];
            r_cur[i] = growth * s * grid.dx();
        }
        if (k > 0)
            for (int i = 0; i < n; ++i) ref[i] += 0.5 * dt * (r_prev[i] + r_cur[i]);
        r_prev.swap(r_cur);
    }

    Decomposition d;
    d.t = t;
    d.a.resize(n);
    d.b.resize(n);
    d.c.resize(n);
    for (int i = 1; i <= n; ++i) {
        double aw = 0.0, bw = 0.0, cw = 0.0;
        for (int j = 1; j <= n; ++j) {
            const double wji = table(j, i);
            aw += wji * w_comp[j - 1];
            bw += wji * (w_comp[j - 1] - v_comp[j - 1]);
            cw += wji * v_comp[j - 1];
        }
        d.a[i - 1] = decay_t / root_n * (jumps[i - 1] - aw);
        d.b[i - 1] = decay_t / root_n * bw;
        d.c[i - 1] = decay_t * (cw / root_n - root_n * ref[i - 1]);
    }
    return d;
}

namespace {

std::vector<double> eval_In_at_neurons(const TestFunction& phi,
                                       const SynapticKernel& w, int n) {
    std::vector<double> out(n);
    for (int j = 1; j <= n; ++j)
        out[j - 1] = eval_In(phi, w, static_cast<double>(j) / n, n);
    return out;
}

}  // namespace

double martingale_Mn(const EventLog& log, const ModelParams& params,
                     const TestFunction& phi, double t, double quad_tol) {
    if (t > log.horizon) throw std::invalid_argument("martingale_Mn: t > horizon");
    const int n = log.n;
    const auto in_phi = eval_In_at_neurons(phi, params.w, n);
    const auto w_comp = weighted_compensators(log, params, params.alpha, t, quad_tol);

    double jump_part = 0.0;
    for (const Event& ev : log.events) {
        if (ev.t > t) break;
        jump_part += std::exp(params.alpha * ev.t) * in_phi[ev.neuron - 1];
    }
    double comp_part = 0.0;
    for (int j = 0; j < n; ++j) comp_part += in_phi[j] * w_comp[j];
    return (jump_part - comp_part) / std::sqrt(static_cast<double>(n));
}

double angle_bracket(const EventLog& log, const ModelParams& params,
                     const TestFunction& phi1, const TestFunction& phi2,
                     double t, double quad_tol) {
    if (t > log.horizon) throw std::invalid_argument("angle_bracket: t > horizon");
    const int n = log.n;
    const auto in1 = eval_In_at_neurons(phi1, params.w, n);
    const auto in2 = eval_In_at_neurons(phi2, params.w, n);
    const auto w_comp =
        weighted_compensators(log, params, 2.0 * params.alpha, t, quad_tol);
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += in1[j] * in2[j] * w_comp[j];
    return acc / n;
}

std::vector<double> martingale_Mn_all(const EventLog& log, const ModelParams& params,
                                      std::span<const TestFunction> phis, double t,
                                      double quad_tol) {
    const int n = log.n;
    const auto w_comp = weighted_compensators(log, params, params.alpha, t, quad_tol);
    std::vector<double> out;
    out.reserve(phis.size());
    for (const TestFunction& phi : phis) {
        const auto in_phi = eval_In_at_neurons(phi, params.w, n);
        double jump_part = 0.0;
        for (const Event& ev : log.events) {
            if (ev.t > t) break;
            jump_part += std::exp(params.alpha * ev.t) * in_phi[ev.neuron - 1];
        }
        double comp_part = 0.0;
        for (int j = 0; j < n; ++j) comp_part += in_phi[j] * w_comp[j];
        out.push_back((jump_part - comp_part) / std::sqrt(static_cast<double>(n)));
    }
    return out;
}

std::vector<double> angle_bracket_diag(const EventLog& log, const ModelParams& params,
                                       std::span<const TestFunction> phis, double t,
                                       double quad_tol) {
    const int n = log.n;
    const auto w_comp =
        weighted_compensators(log, params, 2.0 * params.alpha, t, quad_tol);
    std::vector<double> out;
    out.reserve(phis.size());
    for (const TestFunction& phi : phis) {
        const auto in_phi = eval_In_at_neurons(phi, params.w, n);
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += in_phi[j] * in_phi[j] * w_comp[j];
        out.push_back(acc / n);
    }
    return out;
}

MartingaleProbes martingale_probes(const EventLog& log, const ModelParams& params,
                                   std::span<const TestFunction> phis, double t,
                                   double quad_tol) {
    const int n = log.n;
    const double betas[2] = {params.alpha, 2.0 * params.alpha};
    const auto comps = weighted_compensators_multi(log, params, betas, t, quad_tol);
    MartingaleProbes probes;
    for (const TestFunction& phi : phis) {
        const auto in_phi = eval_In_at_neurons(phi, params.w, n);
        double jump_part = 0.0;
        for (const Event& ev : log.events) {
            if (ev.t > t) break;
            jump_part += std::exp(params.alpha * ev.t) * in_phi[ev.neuron - 1];
        }
        double comp_part = 0.0, bracket = 0.0;
        for (int j = 0; j < n; ++j) {
            comp_part += in_phi[j] * comps[0][j];
            bracket += in_phi[j] * in_phi[j] * comps[1][j];
        }
        probes.mn.push_back((jump_part - comp_part) /
                            std::sqrt(static_cast<double>(n)));
        probes.bracket.push_back(bracket / n);
    }
    return probes;
}

CTermFit c_term_bound_check(const ModelParams& params, const Field& u,
                            const TestFunction& phi, std::span<const int> n_list) {
    if (n_list.size() < 3)
        throw std::invalid_argument("c_term_bound_check: need >= 3 values of n");
    const SpaceTimeGrid& grid = u.grid;
    const int k_n = grid.n_time, g_n = grid.n_space;
    const double dt = grid.dt();
    const double exp_a_dt = std::exp(-params.alpha * dt);

    // High-order reference for int_0^1 w(y,.) f(u(s,y)) dy: composite Simpson
    // on 2G panels with u interpolated to the closed nodes. The reference
    // must stay well below the O(1/n) Riemann gaps being measured.
    const int m = 2 * g_n;
    std::vector<double> node(m + 1), sw(m + 1);
    for (int q = 0; q <= m; ++q) {
        node[q] = static_cast<double>(q) / m;
        sw[q] = (q == 0 || q == m) ? 1.0 : (q % 2 == 1 ? 4.0 : 2.0);
        sw[q] *= (1.0 / m) / 3.0;
    }

    CTermFit fit;
    for (const int n : n_list) {
        const auto in_phi = eval_In_at_neurons(phi, params.w, n);
        std::vector<double> p_ref(m + 1);
        for (int q = 0; q <= m; ++q) p_ref[q] = eval_In(phi, params.w, node[q], n);

        double c_cur = 0.0, sup = 0.0, gap_prev = 0.0;
        for (int k = 0; k <= k_n; ++k) {
            const auto row = u.row(k);
            double term1 = 0.0;
            for (int j = 1; j <= n; ++j)
                term1 += params.f.eval(interp_midpoint_cubic(
                             row, static_cast<double>(j) / n)) * in_phi[j - 1];
            term1 /= n;
            double term2 = 0.0;
            for (int q = 0; q <= m; ++q)
                term2 += sw[q] * p_ref[q] *
                         params.f.eval(interp_midpoint_cubic(row, node[q]));
            const double gap = term1 - term2;
            if (k > 0) {
                c_cur = exp_a_dt * c_cur + 0.5 * dt * (gap + exp_a_dt * gap_prev);
                sup = std::max(sup, std::abs(c_cur));
            }
            gap_prev = gap;
        }
        fit.sup_values.push_back(std::sqrt(static_cast<double>(n)) * sup);
    }

    double scale = 0.0;
    for (const double v : fit.sup_values) scale = std::max(scale, v);
    if (scale < 1e-12) {
        fit.degenerate = true;
        return fit;
    }
    std::vector<double> nv(n_list.begin(), n_list.end());
    const SlopeFit sf = fit_loglog_slope(nv, fit.sup_values);
    fit.slope = sf.slope;
    fit.stderr = sf.stderr;
    return fit;
}

}  // namespace hf
