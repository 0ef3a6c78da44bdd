#include "hf/hawkes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "hf/io.hpp"
#include "hf/quad.hpp"
#include "hf/rng.hpp"

namespace hf {

KernelTable::KernelTable(const SynapticKernel& w, int n) : n_(n) {
    diff_.resize(2 * static_cast<std::size_t>(n) - 1);
    for (int d = -(n - 1); d <= n - 1; ++d) {
        const int j = d >= 0 ? 1 + d : 1;
        const int i = d >= 0 ? 1 : 1 - d;
        diff_[d + n - 1] =
            w.eval(static_cast<double>(j) / n, static_cast<double>(i) / n);
    }
}

PotentialState PotentialState::initial(const ModelParams& params, int n) {
    PotentialState st;
    st.values.resize(n);
    for (int i = 1; i <= n; ++i)
        st.values[i - 1] = params.u0.eval(static_cast<double>(i) / n);
    st.clock = 0.0;
    return st;
}

void PotentialState::decay_to(double t, double alpha) {
    if (t == clock) return;
    const double d = std::exp(-alpha * (t - clock));
    for (double& v : values) v *= d;
    clock = t;
}

void PotentialState::apply_event(const KernelTable& table, int neuron) {
    const int n = table.n();
    const double inv_n = 1.0 / n;
    for (int i = 1; i <= n; ++i) values[i - 1] += table(neuron, i) * inv_n;
}

EventLog simulate_hawkes(const ModelParams& params, int n, double T,
                         std::uint64_t seed, std::uint64_t max_events) {
    if (n < 1 || !(T > 0.0))
        throw std::invalid_argument("simulate_hawkes: need n >= 1, T > 0");

    Rng rng(seed);
    const KernelTable table(params.w, n);
    PotentialState st = PotentialState::initial(params, n);
    std::vector<double> rates(n);

    EventLog log;
    log.n = n;
    log.horizon = T;
    log.seed = seed;

    for (;;) {
        // Between candidates each U^i decays monotonically toward 0, so it
        // stays inside [min(U,0), max(U,0)]; the per-neuron sup of f over
        // that interval dominates the intensity until the next jump.
        double envelope = 0.0;
        for (const double u : st.values)
            envelope += params.f.sup_on_interval(std::min(u, 0.0), std::max(u, 0.0));
        if (!(envelope > 0.0)) break;  // no further events possible

        const double t_cand = st.clock + rng.exponential(envelope);
        if (t_cand > T) break;
        st.decay_to(t_cand, params.alpha);

        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            rates[i] = params.f.eval(st.values[i]);
            total += rates[i];
        }
        if (total > envelope * (1.0 + 1e-12))
            throw std::logic_error("simulate_hawkes: thinning envelope violated");

        if (rng.uniform01() * envelope < total) {
            // accepted: pick the firing neuron proportionally to f(U^i(t-))
            double v = rng.uniform01() * total;
            int neuron = n;
            for (int i = 0; i < n; ++i) {
                v -= rates[i];
                if (v < 0.0) {
                    neuron = i + 1;
                    break;
                }
            }
            double t_event = t_cand;
            if (!log.events.empty() && t_event <= log.events.back().t)
                t_event = std::nextafter(log.events.back().t,
                                         std::numeric_limits<double>::infinity());
            if (t_event <= T) {
                log.events.push_back({t_event, neuron});
                if (log.events.size() > max_events)
                    throw ExplosionError(
                        "simulate_hawkes: exceeded max_events = " +
                        std::to_string(max_events) + " before t = " +
                        std::to_string(t_event));
                st.apply_event(table, neuron);
            }
        }
        // on rejection the loop re-tightens the envelope from the decayed state
    }
    return log;
}

double potential_at(const EventLog& log, const ModelParams& params, double t,
                    int i) {
    if (i < 1 || i > log.n) throw std::invalid_argument("potential_at: index out of range");
    if (t < 0.0 || t > log.horizon)
        throw std::invalid_argument("potential_at: t outside [0, horizon]");
    const double xi = static_cast<double>(i) / log.n;
    double acc = std::exp(-params.alpha * t) * params.u0.eval(xi);
    const double inv_n = 1.0 / log.n;
    for (const Event& ev : log.events) {
        if (ev.t > t) break;
        acc += inv_n * params.w.eval(static_cast<double>(ev.neuron) / log.n, xi) *
               std::exp(-params.alpha * (t - ev.t));
    }
    return acc;
}

std::vector<double> potentials_at(const EventLog& log, const ModelParams& params,
                                  double t) {
    if (t < 0.0 || t > log.horizon)
        throw std::invalid_argument("potentials_at: t outside [0, horizon]");
    const KernelTable table(params.w, log.n);
    PotentialState st = PotentialState::initial(params, log.n);
    for (const Event& ev : log.events) {
        if (ev.t > t) break;
        st.decay_to(ev.t, params.alpha);
        st.apply_event(table, ev.neuron);
    }
    st.decay_to(t, params.alpha);
    return st.values;
}

namespace {

// Visit the inter-event pieces of [0, t]: on each piece every U^j is the
// pure decay of its start value, so integrands are smooth there.
template <class Visit>
void foreach_piece(const EventLog& log, const ModelParams& params,
                   const KernelTable& table, double t, Visit&& visit) {
    PotentialState st = PotentialState::initial(params, log.n);
    double a = 0.0;
    for (const Event& ev : log.events) {
        if (ev.t > t) break;
        if (ev.t > a) visit(a, ev.t, st.values);
        st.decay_to(ev.t, params.alpha);
        st.apply_event(table, ev.neuron);
        a = ev.t;
    }
    if (t > a) {
        st.decay_to(a, params.alpha);
        visit(a, t, st.values);
    }
}

}  // namespace

double compensator(const EventLog& log, const ModelParams& params, int j,
                   double t, double quad_tol) {
    if (!(quad_tol > 0.0)) throw std::invalid_argument("compensator: quad_tol <= 0");
    if (j < 1 || j > log.n) throw std::invalid_argument("compensator: index out of range");
    if (t > log.horizon) throw std::invalid_argument("compensator: t > horizon");
    if (t <= 0.0) return 0.0;

    const double xj = static_cast<double>(j) / log.n;
    const double inv_n = 1.0 / log.n;
    double uj = params.u0.eval(xj);
    double acc = 0.0;
    double a = 0.0;
    const double alpha = params.alpha;
    const auto piece = [&](double lo, double hi, double u_lo) {
        return adaptive_gauss_legendre(
            [&](double s) {
                return params.f.eval(u_lo * std::exp(-alpha * (s - lo)));
            },
            lo, hi, quad_tol * std::max((hi - lo) / t, 1e-3));
    };
    for (const Event& ev : log.events) {
        if (ev.t > t) break;
        if (ev.t > a) acc += piece(a, ev.t, uj);
        uj = uj * std::exp(-alpha * (ev.t - a)) +
             inv_n * params.w.eval(static_cast<double>(ev.neuron) / log.n, xj);
        a = ev.t;
    }
    if (t > a) acc += piece(a, t, uj);
    return acc;
}

std::vector<double> weighted_compensators(const EventLog& log,
                                          const ModelParams& params, double beta,
                                          double t, double quad_tol) {
    return weighted_compensators_multi(log, params, std::span<const double>(&beta, 1),
                                       t, quad_tol)[0];
}

std::vector<std::vector<double>> weighted_compensators_multi(
    const EventLog& log, const ModelParams& params, std::span<const double> betas,
    double t, double quad_tol) {
    if (!(quad_tol > 0.0))
        throw std::invalid_argument("weighted_compensators: quad_tol <= 0");
    if (t > log.horizon)
        throw std::invalid_argument("weighted_compensators: t > horizon");
    const std::size_t nb = betas.size();
    std::vector<std::vector<double>> acc(nb, std::vector<double>(log.n, 0.0));
    if (t <= 0.0) return acc;

    // GL10 nodes on [-1, 1]
    static constexpr double gx[10] = {
        -0.9739065285171717, -0.8650633666889845, -0.6794095682990244,
        -0.4333953941292472, -0.1488743389816312, 0.1488743389816312,
        0.4333953941292472,  0.6794095682990244,  0.8650633666889845,
        0.9739065285171717};
    static constexpr double gw[10] = {
        0.0666713443086881, 0.1494513491505806, 0.2190863625159820,
        0.2692667193099963, 0.2955242247147529, 0.2955242247147529,
        0.2692667193099963, 0.2190863625159820, 0.1494513491505806,
        0.0666713443086881};

    const KernelTable table(params.w, log.n);
    const double alpha = params.alpha;
    double scale = std::abs(alpha);
    for (const double b : betas) scale = std::max(scale, std::abs(b));
    std::vector<double> weight(nb * 10);

    foreach_piece(log, params, table, t, [&](double lo, double hi,
                                             const std::vector<double>& u_lo) {
        // subdivide so GL10 sits far below any stated tolerance, then share
        // the f evaluations at the nodes across every weight function
        const int pieces =
            std::max(1, static_cast<int>(std::ceil((hi - lo) * std::max(scale, 1.0) / 0.5)));
        for (int sub = 0; sub < pieces; ++sub) {
            const double a = lo + (hi - lo) * sub / pieces;
            const double b = lo + (hi - lo) * (sub + 1) / pieces;
            const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
            double decay[10];
            for (int q = 0; q < 10; ++q) {
                const double s = c + hw * gx[q];
                decay[q] = std::exp(-alpha * (s - lo));
                for (std::size_t ib = 0; ib < nb; ++ib)
                    weight[ib * 10 + q] = gw[q] * hw * std::exp(betas[ib] * s);
            }
            for (int j = 0; j < log.n; ++j) {
                const double u0j = u_lo[j];
                double fval[10];
                for (int q = 0; q < 10; ++q)
                    fval[q] = params.f.eval(u0j * decay[q]);
                for (std::size_t ib = 0; ib < nb; ++ib) {
                    double s = 0.0;
                    for (int q = 0; q < 10; ++q) s += weight[ib * 10 + q] * fval[q];
                    acc[ib][j] += s;
                }
            }
        }
    });
    return acc;
}

void write_event_log_csv(const EventLog& log, const ModelParams& params,
                         const std::string& csv_path,
                         const std::string& meta_path) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write " + csv_path);
    out << "# schema-version: " << kSchemaVersion << "\n";
    out << "t,neuron\n";
    for (const Event& ev : log.events)
        out << format_g17(ev.t) << "," << ev.neuron << "\n";

    write_meta(meta_path, {{"schema-version", std::to_string(kSchemaVersion)},
                           {"n", std::to_string(log.n)},
                           {"T", format_g17(log.horizon)},
                           {"seed", std::to_string(log.seed)},
                           {"params-hash", hash_hex(params.hash())}});
}

EventLog read_event_log_csv(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("cannot open " + csv_path);
    EventLog log;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line == "t,neuron") continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("bad event row: " + line);
        Event ev;
        ev.t = std::stod(line.substr(0, comma));
        ev.neuron = std::stoi(line.substr(comma + 1));
        log.events.push_back(ev);
        log.n = std::max(log.n, ev.neuron);
        log.horizon = std::max(log.horizon, ev.t);
    }
    return log;
}

}  // namespace hf
