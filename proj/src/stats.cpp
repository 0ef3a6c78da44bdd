#include "hf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hf {

void RunningMoments::add(double x) {
    const long n1 = n_;
    ++n_;
    const double delta = x - mean_;
    const double dn = delta / n_;
    const double dn2 = dn * dn;
    const double term1 = delta * dn * n1;
    mean_ += dn;
    m4_ += term1 * dn2 * (static_cast<double>(n_) * n_ - 3.0 * n_ + 3.0) +
           6.0 * dn2 * m2_ - 4.0 * dn * m3_;
    m3_ += term1 * dn * (n_ - 2.0) - 3.0 * dn * m2_;
    m2_ += term1;
}

double RunningMoments::variance() const {
    return n_ > 1 ? m2_ / (n_ - 1) : 0.0;
}

double RunningMoments::sd() const { return std::sqrt(variance()); }

double RunningMoments::se_mean() const {
    return n_ > 1 ? sd() / std::sqrt(static_cast<double>(n_)) : 0.0;
}

double RunningMoments::fourth_central() const {
    return n_ > 0 ? m4_ / n_ : 0.0;
}

double RunningMoments::se_variance() const {
    if (n_ < 4) return 0.0;
    const double s2 = variance();
    const double m4 = fourth_central();
    const double var_of_var =
        (m4 - s2 * s2 * (n_ - 3.0) / (n_ - 1.0)) / n_;
    return var_of_var > 0.0 ? std::sqrt(var_of_var) : 0.0;
}

SlopeFit fit_loglog_slope(std::span<const double> n_values,
                          std::span<const double> values) {
    const std::size_t m = values.size();
    if (m < 3 || n_values.size() != m)
        throw std::invalid_argument("fit_loglog_slope: need >= 3 matched points");
    std::vector<double> lx(m), ly(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (!(n_values[i] > 0.0) || !(values[i] > 0.0))
            throw std::invalid_argument("fit_loglog_slope: nonpositive value");
        lx[i] = std::log(n_values[i]);
        ly[i] = std::log(values[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_loglog_slope: degenerate abscissae");

    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
        ssr += r * r;
    }
    fit.stderr = m > 2 ? std::sqrt(ssr / (m - 2) / sxx) : 0.0;
    return fit;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

KsResult ks_normal_test(std::vector<double> samples, double mean, double sd) {
    if (samples.empty() || !(sd > 0.0))
        throw std::invalid_argument("ks_normal_test: empty sample or sd <= 0");
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = normal_cdf((samples[i] - mean) / sd);
        d = std::max(d, (i + 1.0) / n - f);
        d = std::max(d, f - static_cast<double>(i) / n);
    }
    const double rn = std::sqrt(static_cast<double>(n));
    const double lam = d * (rn + 0.12 + 0.11 / rn);
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) *
                            std::exp(-2.0 * k * k * lam * lam);
        p += term;
        if (std::abs(term) < 1e-12) break;
    }
    return {d, std::clamp(p, 0.0, 1.0)};
}

}  // namespace hf
