#include "scorekit/sde.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "scorekit/errors.hpp"

namespace scorekit {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

void check_time_range(double t_final, double epsilon) {
  if (!(epsilon > 0.0) || !(epsilon < t_final)) {
    throw std::invalid_argument("SdeSpec: need 0 < epsilon < t_final");
  }
}
}  // namespace

const char* to_string(SdeKind kind) {
  switch (kind) {
    case SdeKind::VE:
      return "ve";
    case SdeKind::VP:
      return "vp";
    case SdeKind::SubVP:
      return "subvp";
  }
  return "?";
}

SdeSpec SdeSpec::vp(double beta_min, double beta_max, double t_final,
                    double epsilon) {
  // A constant schedule (beta_min == beta_max > 0) is allowed.
  if (!(beta_min >= 0.0) || !(beta_max >= beta_min) || !(beta_max > 0.0)) {
    throw std::invalid_argument("SdeSpec::vp: need 0 <= beta_min <= beta_max > 0");
  }
  check_time_range(t_final, epsilon);
  SdeSpec s;
  s.kind_ = SdeKind::VP;
  s.beta_min_ = beta_min;
  s.beta_max_ = beta_max;
  s.t_final_ = t_final;
  s.epsilon_ = epsilon;
  return s;
}

SdeSpec SdeSpec::subvp(double beta_min, double beta_max, double t_final,
                       double epsilon) {
  SdeSpec s = vp(beta_min, beta_max, t_final, epsilon);
  s.kind_ = SdeKind::SubVP;
  return s;
}

SdeSpec SdeSpec::ve(double sigma_min, double sigma_max, double t_final,
                    double epsilon) {
  if (!(sigma_min > 0.0) || !(sigma_max > sigma_min)) {
    throw std::invalid_argument("SdeSpec::ve: need 0 < sigma_min < sigma_max");
  }
  check_time_range(t_final, epsilon);
  SdeSpec s;
  s.kind_ = SdeKind::VE;
  s.sigma_min_ = sigma_min;
  s.sigma_max_ = sigma_max;
  s.t_final_ = t_final;
  s.epsilon_ = epsilon;
  return s;
}

double SdeSpec::beta(double t) const {
  if (kind_ == SdeKind::VE) {
    throw std::logic_error("SdeSpec::beta: undefined for VE");
  }
  return beta_min_ + t * (beta_max_ - beta_min_);
}

double SdeSpec::beta_integral(double t) const {
  if (kind_ == SdeKind::VE) {
    throw std::logic_error("SdeSpec::beta_integral: undefined for VE");
  }
  return beta_min_ * t + 0.5 * (beta_max_ - beta_min_) * t * t;
}

double SdeSpec::beta_integral_inverse(double b) const {
  if (kind_ == SdeKind::VE) {
    throw std::logic_error("SdeSpec::beta_integral_inverse: undefined for VE");
  }
  if (b < 0.0) {
    throw std::invalid_argument("beta_integral_inverse: negative value");
  }
  if (b == 0.0) return 0.0;
  const double slope = beta_max_ - beta_min_;
  // Stable root of slope/2 t^2 + beta_min t - b = 0.
  return 2.0 * b / (beta_min_ + std::sqrt(beta_min_ * beta_min_ + 2.0 * slope * b));
}

double SdeSpec::drift_scale(double t) const {
  return kind_ == SdeKind::VE ? 0.0 : -0.5 * beta(t);
}

Eigen::VectorXd SdeSpec::drift(const Eigen::VectorXd& x, double t) const {
  return drift_scale(t) * x;
}

double SdeSpec::drift_divergence(double t, Eigen::Index dim) const {
  return static_cast<double>(dim) * drift_scale(t);
}

double SdeSpec::diffusion_sq(double t) const {
  switch (kind_) {
    case SdeKind::VE: {
      const double log_ratio = std::log(sigma_max_ / sigma_min_);
      return sigma_min_ * sigma_min_ * std::exp(2.0 * t * log_ratio);
    }
    case SdeKind::VP:
      return beta(t);
    case SdeKind::SubVP:
      return beta(t) * (-std::expm1(-2.0 * beta_integral(t)));
  }
  return 0.0;
}

double SdeSpec::diffusion(double t) const { return std::sqrt(diffusion_sq(t)); }

double SdeSpec::kernel_var(double t) const {
  switch (kind_) {
    case SdeKind::VE: {
      const double log_ratio = std::log(sigma_max_ / sigma_min_);
      return sigma_min_ * sigma_min_ * std::expm1(2.0 * t * log_ratio) /
             (2.0 * log_ratio);
    }
    case SdeKind::VP:
      return -std::expm1(-beta_integral(t));
    case SdeKind::SubVP: {
      const double m = -std::expm1(-beta_integral(t));
      return m * m;
    }
  }
  return 0.0;
}

TransitionParams SdeSpec::transition(double t) const {
  if (t < 0.0) {
    throw std::invalid_argument("SdeSpec::transition: negative time");
  }
  TransitionParams p;
  p.alpha = kind_ == SdeKind::VE ? 1.0 : std::exp(-0.5 * beta_integral(t));
  p.sigma = std::sqrt(kernel_var(t));
  return p;
}

TransitionParams SdeSpec::transition_between(double s, double t) const {
  if (!(s >= 0.0) || !(t >= s)) {
    throw std::invalid_argument("SdeSpec::transition_between: need 0 <= s <= t");
  }
  TransitionParams p;
  if (kind_ == SdeKind::VE) {
    p.alpha = 1.0;
    p.sigma = std::sqrt(std::max(0.0, kernel_var(t) - kernel_var(s)));
    return p;
  }
  p.alpha = std::exp(-0.5 * (beta_integral(t) - beta_integral(s)));
  // Composition rule: var(0,t) = alpha^2 var(0,s) + var(s,t). For VP this
  // reduces to 1 - exp(-(B_t - B_s)); for SubVP the squared-mass kernel makes
  // the two-time variance depend on both endpoints, not just B_t - B_s.
  const double v = kernel_var(t) - p.alpha * p.alpha * kernel_var(s);
  p.sigma = std::sqrt(std::max(0.0, v));
  return p;
}

Eigen::VectorXd SdeSpec::transition_score(const Eigen::VectorXd& x0,
                                          const Eigen::VectorXd& x_t,
                                          double t) const {
  if (x0.size() != x_t.size()) {
    throw std::invalid_argument("transition_score: dimension mismatch");
  }
  const TransitionParams p = transition(t);
  if (p.sigma < kSigmaFloor) {
    std::ostringstream msg;
    msg << "transition_score: kernel at t=" << t
        << " is degenerate (sigma=" << p.sigma << ")";
    throw DegenerateTransitionError(msg.str());
  }
  return (p.alpha * x0 - x_t) / p.var();
}

double SdeSpec::original_weight(double t) const {
  switch (kind_) {
    case SdeKind::VE:
      return diffusion_sq(t);
    case SdeKind::VP:
      return -std::expm1(-beta_integral(t));
    case SdeKind::SubVP: {
      const double m = -std::expm1(-beta_integral(t));
      return m * m;
    }
  }
  return 0.0;
}

double SdeSpec::weighting(const WeightingScheme& scheme, double t) const {
  const double c = scheme.blend;
  if (!(c >= 0.0 && c <= 1.0)) {
    throw std::invalid_argument("weighting: blend must lie in [0, 1]");
  }
  if (c == 0.0) return original_weight(t);
  if (c == 1.0) return diffusion_sq(t);
  return std::exp((1.0 - c) * std::log(original_weight(t)) +
                  c * std::log(diffusion_sq(t)));
}

double SdeSpec::prior_var() const {
  return kind_ == SdeKind::VE ? kernel_var(t_final_) : 1.0;
}

double SdeSpec::prior_logpdf(const Eigen::VectorXd& x) const {
  const double v = prior_var();
  const double dim = static_cast<double>(x.size());
  return -0.5 * dim * std::log(kTwoPi * v) - 0.5 * x.squaredNorm() / v;
}

Eigen::VectorXd SdeSpec::prior_sample(Eigen::Index dim, Rng& rng) const {
  return std::sqrt(prior_var()) * rng.normal_vector(dim);
}

double SdeSpec::prior_entropy(Eigen::Index dim) const {
  return 0.5 * static_cast<double>(dim) *
         (1.0 + std::log(kTwoPi * prior_var()));
}

}  // namespace scorekit
