#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hf/model.hpp"

namespace hf {

struct Event {
    double t = 0.0;
    int neuron = 0;  // 1-based, position x_i = i/n
};

struct EventLog {
    std::vector<Event> events;  // strictly increasing times in (0, T]
    int n = 0;
    double horizon = 0.0;
    std::uint64_t seed = 0;
};

// Raised when a simulation hits the explosion guard.
struct ExplosionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Kernel values on the neuron lattice, tab(j, i) = w(x_j, x_i). All of the
// registered kernels depend on y - x only, so the table stores the 2n-1
// lattice differences.
class KernelTable {
  public:
    KernelTable(const SynapticKernel& w, int n);
    double operator()(int j, int i) const { return diff_[j - i + n_ - 1]; }
    int n() const { return n_; }

  private:
    int n_;
    std::vector<double> diff_;
};

// Membrane potentials of all neurons at a common clock; evolves by
// exponential decay between events and kernel-scaled jumps at events.
struct PotentialState {
    std::vector<double> values;
    double clock = 0.0;

    static PotentialState initial(const ModelParams& params, int n);
    void decay_to(double t, double alpha);
    void apply_event(const KernelTable& table, int neuron);
};

// Exact thinning simulation of the n-neuron Hawkes network. Deterministic
// given (params, n, T, seed). Throws ExplosionError past max_events.
EventLog simulate_hawkes(const ModelParams& params, int n, double T,
                         std::uint64_t seed,
                         std::uint64_t max_events = 10'000'000);

// U^i_t = e^{-alpha t} u0(x_i) + (1/n) sum_{(s,j): s<=t} w(x_j,x_i) e^{-alpha(t-s)}.
// Events at exactly time t are included.
double potential_at(const EventLog& log, const ModelParams& params, double t,
                    int i);

// All potentials at once via incremental replay (decay + jumps).
std::vector<double> potentials_at(const EventLog& log, const ModelParams& params,
                                  double t);

// int_0^t f(U^j_s) ds, piecewise-adaptive Gauss-Legendre between events.
double compensator(const EventLog& log, const ModelParams& params, int j,
                   double t, double quad_tol);

// int_0^t e^{beta s} f(U^j_s) ds for every j at once; shared workhorse for
// martingale and angle-bracket evaluations.
std::vector<double> weighted_compensators(const EventLog& log,
                                          const ModelParams& params, double beta,
                                          double t, double quad_tol);

// Same integrals for several beta weights in one sweep: the f evaluations
// along each inter-event piece are shared across all weights, which is the
// dominant cost at large n.
std::vector<std::vector<double>> weighted_compensators_multi(
    const EventLog& log, const ModelParams& params, std::span<const double> betas,
    double t, double quad_tol);

void write_event_log_csv(const EventLog& log, const ModelParams& params,
                         const std::string& csv_path,
                         const std::string& meta_path);
EventLog read_event_log_csv(const std::string& csv_path);

}  // namespace hf
