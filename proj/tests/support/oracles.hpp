#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

// Reference implementations used to cross-check the library. Everything here
// is written from first principles and deliberately shares no code with the
// library itself, so agreement between the two is meaningful evidence.
namespace oracles {

// Composite Simpson rule with n subintervals (n even).
double simpson(const std::function<double(double)>& f, double a, double b,
               int n);

// Classic fixed-step RK4 over [a, b].
double rk4_scalar(const std::function<double(double, double)>& f, double y0,
                  double a, double b, int n_steps);

// Diagonal Gaussian helpers.
double gauss_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                    const Eigen::VectorXd& var);
double gauss_entropy(const Eigen::VectorXd& var);
double gauss_kl(const Eigen::VectorXd& mean0, const Eigen::VectorXd& var0,
                const Eigen::VectorXd& mean1, const Eigen::VectorXd& var1);

double normal_cdf(double z);

// Central finite difference gradient of a scalar function.
Eigen::VectorXd finite_diff_grad(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h = 1e-5);

// Central finite difference Jacobian-vector product of a vector function.
Eigen::VectorXd finite_diff_jvp(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, const Eigen::VectorXd& v, double h = 1e-5);

// Two-pass sample moments.
double naive_mean(const std::vector<double>& v);
double naive_variance(const std::vector<double>& v);

// Kolmogorov-Smirnov distance of a sample against a cdf, plus the large-n
// critical value at significance alpha in {0.01, 0.001}.
double ks_statistic(std::vector<double> sample,
                    const std::function<double(double)>& cdf);
double ks_critical(std::size_t n, double alpha);

// Percentile bootstrap confidence interval for a statistic of paired data.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return lo <= x && x <= hi; }
};
Interval bootstrap_ci(
    const std::vector<double>& a, const std::vector<double>& b,
    const std::function<double(const std::vector<double>&,
                               const std::vector<double>&)>& statistic,
    int n_resamples, double confidence, std::uint64_t seed);

}  // namespace oracles
