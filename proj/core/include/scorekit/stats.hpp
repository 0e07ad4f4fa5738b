#pragma once

#include <cstddef>
#include <vector>

namespace scorekit::stats {

double mean(const std::vector<double>& v);

// Unbiased sample variance (n - 1 denominator). Zero for n < 2.
double sample_variance(const std::vector<double>& v);

// Standard error of the mean.
double std_error(const std::vector<double>& v);

// Welford accumulator, used for running-variance traces.
class RunningMoments {
 public:
  void push(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Regularized incomplete beta I_x(a, b).
double reg_inc_beta(double a, double b, double x);

// Student's t distribution with dof degrees of freedom.
double student_t_cdf(double t, double dof);

// Quantile of Student's t, p in (0, 1).
double student_t_quantile(double p, double dof);

// Half width of the two-sided confidence interval for the mean of v at the
// given confidence level (e.g. 0.95), using the t distribution with n - 1
// degrees of freedom.
double mean_ci_half_width(const std::vector<double>& v, double confidence);

}  // namespace scorekit::stats
