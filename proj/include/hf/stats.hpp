#pragma once

#include <span>
#include <vector>

namespace hf {

// Streaming moments (Welford, extended through the fourth central moment);
// replicas are folded in a fixed order so aggregates are reproducible.
class RunningMoments {
  public:
    void add(double x);
    long count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const;          // unbiased
    double sd() const;
    double se_mean() const;
    double fourth_central() const;    // m4 = M4 / n
    // standard error of the unbiased variance via the fourth moment
    double se_variance() const;

  private:
    long n_ = 0;
    double mean_ = 0.0, m2_ = 0.0, m3_ = 0.0, m4_ = 0.0;
};

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr = 0.0;  // OLS standard error of the slope
};

// OLS on (log n, log value); rejects nonpositive values, needs >= 3 points.
SlopeFit fit_loglog_slope(std::span<const double> n_values,
                          std::span<const double> values);

double normal_cdf(double z);

struct KsResult {
    double d = 0.0;  // KS statistic
    double p = 0.0;  // asymptotic p-value with the Stephens small-sample factor
};

// One-sample Kolmogorov-Smirnov test of `samples` against N(mean, sd^2).
KsResult ks_normal_test(std::vector<double> samples, double mean, double sd);

}  // namespace hf
