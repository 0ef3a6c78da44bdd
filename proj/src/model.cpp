#include "hf/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "hf/quad.hpp"
#include "hf/rng.hpp"

namespace hf {

namespace {
double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::string fmt_param(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}
}  // namespace

// ---------------------------------------------------------------- FiringRate

FiringRate::FiringRate(Kind k, double p0, double p1, double p2)
    : kind_(k), p0_(p0), p1_(p1), p2_(p2) {
    switch (kind_) {
        case Kind::Sigmoid:
        case Kind::Erf:
            lower_bound_ = p2_;  // additive floor
            break;
        case Kind::Constant:
            lower_bound_ = p0_;
            break;
        case Kind::Affine:
            lower_bound_ = 0.0;  // only meaningful where a u + b >= 0
            break;
    }
}

FiringRate FiringRate::sigmoid(double f0, double kappa, double floor) {
    if (f0 <= 0.0 || floor < 0.0)
        throw std::invalid_argument("sigmoid rate: need f0 > 0, floor >= 0");
    return FiringRate(Kind::Sigmoid, f0, kappa, floor);
}

FiringRate FiringRate::erf_rate(double f0, double kappa, double floor) {
    if (f0 <= 0.0 || floor < 0.0)
        throw std::invalid_argument("erf rate: need f0 > 0, floor >= 0");
    return FiringRate(Kind::Erf, f0, kappa, floor);
}

FiringRate FiringRate::constant(double c) {
    if (c < 0.0) throw std::invalid_argument("constant rate: need c >= 0");
    return FiringRate(Kind::Constant, c, 0.0, 0.0);
}

FiringRate FiringRate::affine(double a, double b) {
    return FiringRate(Kind::Affine, a, b, 0.0);
}

double FiringRate::eval(double u) const {
    switch (kind_) {
        case Kind::Sigmoid: return p2_ + p0_ * logistic(u - p1_);
        case Kind::Erf:     return p2_ + p0_ * 0.5 * (1.0 + std::erf(u - p1_));
        case Kind::Constant: return p0_;
        case Kind::Affine:  return p0_ * u + p1_;
    }
    return 0.0;
}

double FiringRate::deriv(double u) const {
    switch (kind_) {
        case Kind::Sigmoid: {
            const double s = logistic(u - p1_);
            return p0_ * s * (1.0 - s);
        }
        case Kind::Erf: {
            const double d = u - p1_;
            return p0_ * std::exp(-d * d) / std::sqrt(M_PI);
        }
        case Kind::Constant: return 0.0;
        case Kind::Affine:  return p0_;
    }
    return 0.0;
}

double FiringRate::deriv2(double u) const {
    switch (kind_) {
        case Kind::Sigmoid: {
            const double s = logistic(u - p1_);
            return p0_ * s * (1.0 - s) * (1.0 - 2.0 * s);
        }
        case Kind::Erf: {
            const double d = u - p1_;
            return -2.0 * d * p0_ * std::exp(-d * d) / std::sqrt(M_PI);
        }
        default: return 0.0;
    }
}

double FiringRate::sup_on_interval(double a, double b) const {
    if (a > b) std::swap(a, b);
    switch (kind_) {
        case Kind::Sigmoid:
        case Kind::Erf:
            return eval(b);  // both families are increasing
        case Kind::Constant:
            return p0_;
        case Kind::Affine:
            return std::max(eval(a), eval(b));
    }
    return 0.0;
}

std::string FiringRate::describe() const {
    switch (kind_) {
        case Kind::Sigmoid:
            return "rate:sigmoid(f0=" + fmt_param(p0_) + ",kappa=" + fmt_param(p1_) +
                   ",floor=" + fmt_param(p2_) + ")";
        case Kind::Erf:
            return "rate:erf(f0=" + fmt_param(p0_) + ",kappa=" + fmt_param(p1_) +
                   ",floor=" + fmt_param(p2_) + ")";
        case Kind::Constant:
            return "rate:constant(c=" + fmt_param(p0_) + ")";
        case Kind::Affine:
            return "rate:affine(a=" + fmt_param(p0_) + ",b=" + fmt_param(p1_) + ")";
    }
    return "";
}

// ------------------------------------------------------------ SynapticKernel

SynapticKernel::SynapticKernel(Kind k, double a, double s)
    : kind_(k), a_(a), sigma_(s) {
    switch (kind_) {
        case Kind::Constant:
            sup_abs_ = std::abs(a_);
            break;
        case Kind::Gaussian:
            sup_abs_ = std::abs(a_);
            break;
        case Kind::MexicanHat: {
            // |profile| is maximized at d = 0, d = 1, or the interior
            // critical point d* with d*^2 = ln(sigma/A) / (1 - 1/sigma)
            double m = std::max(std::abs(profile(0.0)), std::abs(profile(1.0)));
            if (a_ > 0.0 && sigma_ != 1.0) {
                const double q = std::log(sigma_ / a_) / (1.0 - 1.0 / sigma_);
                if (q > 0.0) {
                    const double d = std::sqrt(q);
                    if (d < 1.0) m = std::max(m, std::abs(profile(d)));
                }
            }
            sup_abs_ = m;
            break;
        }
    }
}

SynapticKernel SynapticKernel::constant(double c) {
    return SynapticKernel(Kind::Constant, c, 1.0);
}

SynapticKernel SynapticKernel::gaussian(double amplitude, double sigma) {
    if (sigma <= 0.0) throw std::invalid_argument("gaussian kernel: sigma <= 0");
    return SynapticKernel(Kind::Gaussian, amplitude, sigma);
}

SynapticKernel SynapticKernel::mexican_hat(double inhibition, double sigma) {
    if (!(inhibition < 1.0) || !(sigma > 1.0))
        throw std::invalid_argument("mexican hat kernel: need A < 1, sigma > 1");
    return SynapticKernel(Kind::MexicanHat, inhibition, sigma);
}

double SynapticKernel::profile(double d) const {
    switch (kind_) {
        case Kind::Constant:   return a_;
        case Kind::Gaussian:   return a_ * std::exp(-d * d / sigma_);
        case Kind::MexicanHat: return std::exp(-d * d) - a_ * std::exp(-d * d / sigma_);
    }
    return 0.0;
}

double SynapticKernel::profile_deriv(double d) const {
    switch (kind_) {
        case Kind::Constant:   return 0.0;
        case Kind::Gaussian:   return a_ * (-2.0 * d / sigma_) * std::exp(-d * d / sigma_);
        case Kind::MexicanHat:
            return -2.0 * d * std::exp(-d * d) +
                   a_ * (2.0 * d / sigma_) * std::exp(-d * d / sigma_);
    }
    return 0.0;
}

double SynapticKernel::eval(double y, double x) const { return profile(y - x); }
double SynapticKernel::d1(double y, double x) const { return profile_deriv(y - x); }
double SynapticKernel::d2(double y, double x) const { return -profile_deriv(y - x); }

std::string SynapticKernel::describe() const {
    switch (kind_) {
        case Kind::Constant:
            return "kernel:constant(c=" + fmt_param(a_) + ")";
        case Kind::Gaussian:
            return "kernel:gaussian(A=" + fmt_param(a_) + ",sigma=" + fmt_param(sigma_) + ")";
        case Kind::MexicanHat:
            return "kernel:mexican_hat(A=" + fmt_param(a_) + ",sigma=" + fmt_param(sigma_) + ")";
    }
    return "";
}

// ---------------------------------------------------------- InitialCondition

InitialCondition::InitialCondition(Kind k, double a, double b)
    : kind_(k), a_(a), b_(b) {}

InitialCondition InitialCondition::constant(double a) {
    return InitialCondition(Kind::Constant, a, 0.0);
}
InitialCondition InitialCondition::affine(double a, double b) {
    return InitialCondition(Kind::Affine, a, b);
}
InitialCondition InitialCondition::smoothstep(double a) {
    return InitialCondition(Kind::Smoothstep, a, 0.0);
}
InitialCondition InitialCondition::cosine(double a) {
    return InitialCondition(Kind::Cosine, a, 0.0);
}

double InitialCondition::eval(double x) const {
    switch (kind_) {
        case Kind::Constant:   return a_;
        case Kind::Affine:     return a_ + b_ * x;
        case Kind::Smoothstep: return a_ * x * x * (3.0 - 2.0 * x);
        case Kind::Cosine:     return a_ * 0.5 * (1.0 - std::cos(2.0 * M_PI * x));
    }
    return 0.0;
}

double InitialCondition::deriv(double x) const {
    switch (kind_) {
        case Kind::Constant:   return 0.0;
        case Kind::Affine:     return b_;
        case Kind::Smoothstep: return 6.0 * a_ * x * (1.0 - x);
        case Kind::Cosine:     return a_ * M_PI * std::sin(2.0 * M_PI * x);
    }
    return 0.0;
}

std::string InitialCondition::describe() const {
    switch (kind_) {
        case Kind::Constant:   return "u0:constant(a=" + fmt_param(a_) + ")";
        case Kind::Affine:     return "u0:affine(a=" + fmt_param(a_) + ",b=" + fmt_param(b_) + ")";
        case Kind::Smoothstep: return "u0:smoothstep(a=" + fmt_param(a_) + ")";
        case Kind::Cosine:     return "u0:cosine(a=" + fmt_param(a_) + ")";
    }
    return "";
}

// ---------------------------------------------------------------- ModelParams

std::string ModelParams::describe() const {
    return f.describe() + ";" + w.describe() + ";" + u0.describe() +
           ";alpha=" + fmt_param(alpha);
}

std::uint64_t ModelParams::hash() const {
    const std::string s = describe();
    return fnv1a64(s.data(), s.size());
}

// -------------------------------------------------------------- TestFunction

const std::vector<TestFunction>& registered_test_functions() {
    static const std::vector<TestFunction> family = [] {
        const double two_pi = 2.0 * M_PI;
        std::vector<TestFunction> v;
        v.push_back({"one", [](double) { return 1.0; }, [](double) { return 0.0; }, 1.0});
        v.push_back({"x", [](double x) { return x; }, [](double) { return 1.0; }, 1.0});
        v.push_back({"x2", [](double x) { return x * x; }, [](double x) { return 2.0 * x; }, 1.0});
        v.push_back({"sin2pi", [two_pi](double x) { return std::sin(two_pi * x); },
                     [two_pi](double x) { return two_pi * std::cos(two_pi * x); }, 1.0});
        v.push_back({"cos2pi", [two_pi](double x) { return std::cos(two_pi * x); },
                     [two_pi](double x) { return -two_pi * std::sin(two_pi * x); }, 1.0});
        v.push_back({"expx", [](double x) { return std::exp(x); },
                     [](double x) { return std::exp(x); }, std::exp(1.0)});
        return v;
    }();
    return family;
}

const TestFunction& test_function(const std::string& label) {
    for (const auto& phi : registered_test_functions())
        if (phi.label == label) return phi;
    throw std::invalid_argument("unknown test function: " + label);
}

TestFunction scale(const TestFunction& phi, double c) {
    auto e = phi.eval, d = phi.deriv;
    return {phi.label + "*" + fmt_param(c),
            [e, c](double x) { return c * e(x); },
            [d, c](double x) { return c * d(x); },
            std::abs(c) * phi.sup_abs};
}

TestFunction add(const TestFunction& a, const TestFunction& b) {
    auto ea = a.eval, eb = b.eval, da = a.deriv, db = b.deriv;
    return {a.label + "+" + b.label,
            [ea, eb](double x) { return ea(x) + eb(x); },
            [da, db](double x) { return da(x) + db(x); },
            a.sup_abs + b.sup_abs};
}

// -------------------------------------------------------------- SpaceTimeGrid

SpaceTimeGrid::SpaceTimeGrid(int g, int k, double t)
    : n_space(g), n_time(k), horizon(t) {
    if (g < 1 || k < 1 || !(t > 0.0))
        throw std::invalid_argument("SpaceTimeGrid: need G >= 1, K >= 1, T > 0");
    if (std::abs(dt() * k - t) > 1e-12 * t)
        throw std::invalid_argument("SpaceTimeGrid: dt*K does not reproduce T");
}

int SpaceTimeGrid::time_index(double tq) const {
    const double k = tq / dt();
    const int ki = static_cast<int>(std::llround(k));
    if (ki < 0 || ki > n_time || std::abs(k - ki) > 1e-9)
        throw std::invalid_argument("time " + fmt_param(tq) + " is not a grid time");
    return ki;
}

// ---------------------------------------------------------------- operations

double eval_I(const TestFunction& phi, const SynapticKernel& w, double y,
              int quad_points) {
    if (quad_points < 2) throw std::invalid_argument("eval_I: quad_points < 2");
    return simpson([&](double x) { return phi.eval(x) * w.eval(y, x); }, 0.0,
                   1.0, quad_points);
}

double eval_In(const TestFunction& phi, const SynapticKernel& w, double y,
               int n) {
    if (n < 1) throw std::invalid_argument("eval_In: n < 1");
    double acc = 0.0;
    for (int i = 1; i <= n; ++i) {
        const double xi = static_cast<double>(i) / n;
        acc += w.eval(y, xi) * phi.eval(xi);
    }
    return acc / n;
}

// -------------------------------------------------------------- config parse

namespace {

struct KvMap {
    std::map<std::string, std::string> kv;
    std::map<std::string, bool> used;

    bool has(const std::string& k) const { return kv.count(k) > 0; }
    std::string str(const std::string& k) {
        auto it = kv.find(k);
        if (it == kv.end()) throw std::invalid_argument("config: missing key '" + k + "'");
        used[k] = true;
        return it->second;
    }
    double num(const std::string& k) {
        const std::string s = str(k);
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument("config: bad number for '" + k + "': " + s);
        return v;
    }
    double num_or(const std::string& k, double dflt) {
        return has(k) ? num(k) : dflt;
    }
};

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

ModelParams parse_model_config(const std::string& text) {
    KvMap m;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (m.kv.count(key))
            throw std::invalid_argument("config: duplicate key '" + key + "'");
        m.kv[key] = val;
        m.used[key] = false;
    }

    const std::string rate_kind = m.str("rate.kind");
    FiringRate f = [&] {
        if (rate_kind == "sigmoid")
            return FiringRate::sigmoid(m.num("rate.f0"), m.num("rate.kappa"),
                                       m.num_or("rate.floor", 0.05));
        if (rate_kind == "erf")
            return FiringRate::erf_rate(m.num("rate.f0"), m.num("rate.kappa"),
                                        m.num_or("rate.floor", 0.05));
        if (rate_kind == "constant") return FiringRate::constant(m.num("rate.c"));
        if (rate_kind == "affine")
            return FiringRate::affine(m.num("rate.a"), m.num("rate.b"));
        throw std::invalid_argument("config: unknown rate.kind '" + rate_kind + "'");
    }();

    const std::string kern_kind = m.str("kernel.kind");
    SynapticKernel w = [&] {
        if (kern_kind == "constant") return SynapticKernel::constant(m.num("kernel.c"));
        if (kern_kind == "gaussian")
            return SynapticKernel::gaussian(m.num("kernel.A"), m.num("kernel.sigma"));
        if (kern_kind == "mexican_hat")
            return SynapticKernel::mexican_hat(m.num("kernel.A"), m.num("kernel.sigma"));
        throw std::invalid_argument("config: unknown kernel.kind '" + kern_kind + "'");
    }();

    const std::string u0_kind = m.str("u0.kind");
    InitialCondition u0 = [&] {
        if (u0_kind == "constant") return InitialCondition::constant(m.num("u0.a"));
        if (u0_kind == "affine")
            return InitialCondition::affine(m.num("u0.a"), m.num("u0.b"));
        if (u0_kind == "smoothstep") return InitialCondition::smoothstep(m.num("u0.a"));
        if (u0_kind == "cosine") return InitialCondition::cosine(m.num("u0.a"));
        throw std::invalid_argument("config: unknown u0.kind '" + u0_kind + "'");
    }();

    const double alpha = m.num("alpha");
    if (alpha < 0.0) throw std::invalid_argument("config: alpha must be >= 0");

    for (const auto& [key, used] : m.used)
        if (!used)
            throw std::invalid_argument("config: unknown key '" + key + "'");

    return ModelParams{f, w, u0, alpha};
}

ModelParams load_model_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model_config(buf.str());
}

}  // namespace hf
