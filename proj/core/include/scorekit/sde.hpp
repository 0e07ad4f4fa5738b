#pragma once

#include <Eigen/Dense>

#include "scorekit/rng.hpp"

namespace scorekit {

enum class SdeKind { VE, VP, SubVP };

const char* to_string(SdeKind kind);

// Mean scale and marginal std of the forward perturbation kernel:
// x_t | x_s  ~  N(alpha x_s, sigma^2 I).
struct TransitionParams {
  double alpha = 1.0;
  double sigma = 0.0;
  double var() const { return sigma * sigma; }
};

// Time weighting of the score-matching integrand. blend = 0 recovers the
// variance-matched weighting classically used for sample quality, blend = 1
// the diffusion^2 weighting that turns the objective into a likelihood
// bound, and intermediate values blend the two geometrically.
struct WeightingScheme {
  double blend = 1.0;

  static WeightingScheme original() { return WeightingScheme{0.0}; }
  static WeightingScheme likelihood() { return WeightingScheme{1.0}; }
};

// One of the three standard forward noising processes on [0, T]:
//
//   VE     dx = sigma(t) dw,            sigma(t) geometric between bounds
//   VP     dx = -1/2 beta(t) x dt + sqrt(beta(t)) dw
//   SubVP  like VP but with diffusion^2 beta(t)(1 - exp(-2 B(t)))
//
// beta is linear between beta_min and beta_max, B its running integral.
// Everything here is closed form; no quadrature happens at runtime.
class SdeSpec {
 public:
  static SdeSpec vp(double beta_min = 0.1, double beta_max = 20.0,
                    double t_final = 1.0, double epsilon = 1e-5);
  static SdeSpec subvp(double beta_min = 0.1, double beta_max = 20.0,
                       double t_final = 1.0, double epsilon = 1e-2);
  static SdeSpec ve(double sigma_min = 0.01, double sigma_max = 50.0,
                    double t_final = 1.0, double epsilon = 1e-5);

  SdeKind kind() const { return kind_; }
  double t_final() const { return t_final_; }
  double epsilon() const { return epsilon_; }
  double beta_min() const { return beta_min_; }
  double beta_max() const { return beta_max_; }
  double sigma_min() const { return sigma_min_; }
  double sigma_max() const { return sigma_max_; }

  // beta(t) and B(t) = int_0^t beta(s) ds; VP and SubVP only.
  double beta(double t) const;
  double beta_integral(double t) const;
  // Inverse of B on t >= 0.
  double beta_integral_inverse(double b) const;

  // Drift is diagonal-linear for all three families: f(x, t) = c(t) x.
  double drift_scale(double t) const;
  Eigen::VectorXd drift(const Eigen::VectorXd& x, double t) const;
  double drift_divergence(double t, Eigen::Index dim) const;

  double diffusion(double t) const;
  double diffusion_sq(double t) const;

  // Kernel from time 0 to t, and between two times s <= t.
  TransitionParams transition(double t) const;
  TransitionParams transition_between(double s, double t) const;

  // Gradient of log N(x_t; alpha x0, sigma^2 I) with respect to x_t.
  // Raises DegenerateTransitionError when sigma underflows the floor.
  Eigen::VectorXd transition_score(const Eigen::VectorXd& x0,
                                   const Eigen::VectorXd& x_t, double t) const;

  double weighting(const WeightingScheme& scheme, double t) const;
  // The variance-matched weight on its own; this is also the alpha^2 factor
  // of the importance proposal density g^2 / (alpha^2 Z).
  double original_weight(double t) const;

  // Reference prior at T: N(0, prior_var I). For VP/SubVP the unit Gaussian,
  // for VE the accumulated kernel variance at T.
  double prior_var() const;
  double prior_logpdf(const Eigen::VectorXd& x) const;
  Eigen::VectorXd prior_sample(Eigen::Index dim, Rng& rng) const;
  double prior_entropy(Eigen::Index dim) const;

  // Smallest marginal std treated as nonzero by transition_score and the
  // denoising factors built on it.
  static constexpr double kSigmaFloor = 1e-12;

 private:
  SdeSpec() = default;

  // Kernel variance accumulated from time 0.
  double kernel_var(double t) const;

  SdeKind kind_ = SdeKind::VP;
  double beta_min_ = 0.0;
  double beta_max_ = 0.0;
  double sigma_min_ = 0.0;
  double sigma_max_ = 0.0;
  double t_final_ = 1.0;
  double epsilon_ = 1e-5;
};

}  // namespace scorekit
