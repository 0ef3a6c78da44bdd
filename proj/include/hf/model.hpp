#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace hf {

// Firing rate f: R -> R+, with derivative access and a usable lower bound.
// Registered parametric families only; all instances are immutable values.
class FiringRate {
  public:
    enum class Kind { Sigmoid, Erf, Constant, Affine };

    double eval(double u) const;
    double deriv(double u) const;
    double deriv2(double u) const;
    double lower_bound() const { return lower_bound_; }
    // tight upper bound of f over [a, b] (a <= b)
    double sup_on_interval(double a, double b) const;

    Kind kind() const { return kind_; }
    bool is_constant() const { return kind_ == Kind::Constant; }
    std::string describe() const;

    // f(u) = floor + f0 / (1 + exp(-(u - kappa)))
    static FiringRate sigmoid(double f0, double kappa, double floor = 0.05);
    // f(u) = floor + f0 * (1 + erf(u - kappa)) / 2
    static FiringRate erf_rate(double f0, double kappa, double floor = 0.05);
    static FiringRate constant(double c);
    // f(u) = a*u + b; for deterministic solver tests, not for simulation
    static FiringRate affine(double a, double b);

  private:
    FiringRate(Kind k, double p0, double p1, double p2);
    Kind kind_;
    double p0_, p1_, p2_;
    double lower_bound_;
};

// Synaptic kernel w(y, x); w(x_j, x_i) is the weight of a spike of the
// neuron at y=x_j onto the neuron at x=x_i.
class SynapticKernel {
  public:
    enum class Kind { Constant, Gaussian, MexicanHat };

    double eval(double y, double x) const;
    double d1(double y, double x) const;  // d/dy
    double d2(double y, double x) const;  // d/dx
    double sup_abs() const { return sup_abs_; }

    Kind kind() const { return kind_; }
    std::string describe() const;

    static SynapticKernel constant(double c);
    // w(y,x) = A * exp(-(y-x)^2 / sigma)
    static SynapticKernel gaussian(double amplitude, double sigma);
    // w(y,x) = exp(-(y-x)^2) - A * exp(-(y-x)^2 / sigma), A < 1, sigma > 1
    static SynapticKernel mexican_hat(double inhibition, double sigma);

  private:
    SynapticKernel(Kind k, double a, double s);
    double profile(double d) const;        // w as a function of d = y - x
    double profile_deriv(double d) const;
    Kind kind_;
    double a_, sigma_;
    double sup_abs_;
};

// Initial membrane potential u0: [0,1] -> R, smooth with derivative.
class InitialCondition {
  public:
    enum class Kind { Constant, Affine, Smoothstep, Cosine };

    double eval(double x) const;
    double deriv(double x) const;
    std::string describe() const;

    static InitialCondition constant(double a);
    static InitialCondition affine(double a, double b);      // a + b x
    static InitialCondition smoothstep(double a);            // a x^2 (3 - 2x)
    static InitialCondition cosine(double a);                // a (1 - cos 2 pi x)/2

  private:
    InitialCondition(Kind k, double a, double b);
    Kind kind_;
    double a_, b_;
};

struct ModelParams {
    FiringRate f = FiringRate::constant(1.0);
    SynapticKernel w = SynapticKernel::constant(0.0);
    InitialCondition u0 = InitialCondition::constant(0.0);
    double alpha = 1.0;

    std::string describe() const;
    std::uint64_t hash() const;
};

// Test function phi in the registered closed-form family.
struct TestFunction {
    std::string label;
    std::function<double(double)> eval;
    std::function<double(double)> deriv;
    double sup_abs = 1.0;
};

// The registered family {1, x, x^2, sin(2 pi x), cos(2 pi x), e^x}.
const std::vector<TestFunction>& registered_test_functions();
const TestFunction& test_function(const std::string& label);
TestFunction scale(const TestFunction& phi, double c);
TestFunction add(const TestFunction& a, const TestFunction& b);

// Uniform grid over [0,T] x [0,1]: K time steps, G space cells with
// midpoint nodes y_g = (g + 1/2)/G and time nodes t_k = k T/K.
struct SpaceTimeGrid {
    int n_space = 0;
    int n_time = 0;
    double horizon = 0.0;

    SpaceTimeGrid() = default;
    SpaceTimeGrid(int g, int k, double t);

    double dx() const { return 1.0 / n_space; }
    double dt() const { return horizon / n_time; }
    double y(int g) const { return (g + 0.5) / n_space; }
    double t(int k) const { return k * (horizon / n_time); }
    // index of a time that must lie on the grid
    int time_index(double t) const;

    bool operator==(const SpaceTimeGrid&) const = default;
};

// I[phi](y) = int_0^1 phi(x) w(y,x) dx by composite Simpson.
double eval_I(const TestFunction& phi, const SynapticKernel& w, double y,
              int quad_points);

// I^n[phi](y) = n^-1 sum_{i=1..n} w(y, i/n) phi(i/n), the right-endpoint
// Riemann sum at the neuron positions; must match the model definition
// exactly, so no higher-order rule here.
double eval_In(const TestFunction& phi, const SynapticKernel& w, double y,
               int n);

// Parse a model config in "key = value" form ('#' comments). Documented
// keys: rate.kind/.f0/.kappa/.floor/.c/.a/.b, kernel.kind/.A/.sigma/.c,
// u0.kind/.a/.b, alpha. Unknown keys are a hard error.
ModelParams parse_model_config(const std::string& text);
ModelParams load_model_config(const std::string& path);

}  // namespace hf
