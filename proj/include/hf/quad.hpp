#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

namespace hf {

// Composite Simpson on [a,b]; `panels` is rounded up to the next even count.
template <class F>
double simpson(F&& g, double a, double b, int panels) {
    if (panels < 2) throw std::invalid_argument("simpson: panels < 2");
    const int m = (panels % 2 == 0) ? panels : panels + 1;
    const double h = (b - a) / m;
    double acc = g(a) + g(b);
    for (int j = 1; j < m; ++j) acc += (j % 2 == 1 ? 4.0 : 2.0) * g(a + j * h);
    return acc * h / 3.0;
}

// 10-point Gauss-Legendre on [a,b].
template <class F>
double gauss_legendre10(F&& g, double a, double b) {
    static constexpr double x[5] = {
        0.1488743389816312, 0.4333953941292472, 0.6794095682990244,
        0.8650633666889845, 0.9739065285171717};
    static constexpr double w[5] = {
        0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
        0.1494513491505806, 0.0666713443086881};
    const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < 5; ++i)
        acc += w[i] * (g(c - hw * x[i]) + g(c + hw * x[i]));
    return acc * hw;
}

namespace detail {
template <class F>
double adaptive_gl_rec(F& g, double a, double b, double whole, double tol,
                       int depth) {
    const double mid = 0.5 * (a + b);
    const double left = gauss_legendre10(g, a, mid);
    const double right = gauss_legendre10(g, mid, b);
    const double delta = left + right - whole;
    // the relative floor keeps huge integrands from recursing on fp noise
    const double goal =
        std::max(tol, 1e-14 * (std::abs(left) + std::abs(right)));
    if (std::abs(delta) <= goal || depth >= 24) return left + right;
    return adaptive_gl_rec(g, a, mid, left, 0.5 * tol, depth + 1) +
           adaptive_gl_rec(g, mid, b, right, 0.5 * tol, depth + 1);
}
}  // namespace detail

// Adaptive Gauss-Legendre to absolute tolerance `tol`.
template <class F>
double adaptive_gauss_legendre(F&& g, double a, double b, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("adaptive_gauss_legendre: tol <= 0");
    if (a == b) return 0.0;
    return detail::adaptive_gl_rec(g, a, b, gauss_legendre10(g, a, b), tol, 0);
}

// Cubic (4-point Lagrange) interpolation of values sampled at the uniform
// cell midpoints y_g = (g+1/2)/G.  The stencil is clamped at the ends, so
// x in the boundary half-cells is a short extrapolation.
double interp_midpoint_cubic(std::span<const double> row, double x);

}  // namespace hf
