#include "scorekit/likelihood.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "scorekit/errors.hpp"
#include "scorekit/stats.hpp"

namespace scorekit {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kLn2 = 0.69314718055994530941723212145818;
}  // namespace

const char* to_string(LikelihoodKind kind) {
  switch (kind) {
    case LikelihoodKind::OdeExact:
      return "ode";
    case LikelihoodKind::BoundDsm:
      return "bound_dsm";
    case LikelihoodKind::BoundSm:
      return "bound_sm";
    case LikelihoodKind::BoundDsmCorrected:
      return "bound_dsm_corrected";
  }
  return "?";
}

const char* to_string(EntropyForm form) {
  return form == EntropyForm::DriftDotScore ? "drift_dot_score"
                                            : "divergence_form";
}

double bits_per_dim_from_logp(double logp_nats, Eigen::Index dim,
                              double offset_bits) {
  return -logp_nats / (static_cast<double>(dim) * kLn2) + offset_bits;
}

LikelihoodResult ode_log_likelihood(const ScoreModel& model,
                                    const SdeSpec& spec,
                                    const Eigen::VectorXd& x,
                                    const OdeLikelihoodConfig& config,
                                    Rng* rng) {
  const Eigen::Index dim = x.size();
  if (dim != model_dim(model)) {
    throw std::invalid_argument("ode_log_likelihood: dimension mismatch");
  }
  Eigen::VectorXd y0(dim + 1);
  y0.head(dim) = x;
  y0[dim] = 0.0;

  const OdeField field = [&](const Eigen::VectorXd& y, double t) {
    const Eigen::VectorXd xt = y.head(dim);
    Eigen::VectorXd out(dim + 1);
    out.head(dim) = ode_rhs(model, spec, xt, t);
    out[dim] = ode_rhs_divergence(model, spec, xt, t, config.divergence, rng);
    return out;
  };

  const TrajectoryRecord rec = rk45_integrate(
      field, y0, spec.epsilon(), spec.t_final(), config.solver);
  const Eigen::VectorXd y_final = rec.final_state();
  const double delta_logp = y_final[dim];

  LikelihoodResult res;
  res.kind = LikelihoodKind::OdeExact;
  res.logp_nats = spec.prior_logpdf(y_final.head(dim)) + delta_logp;
  res.n_time_samples = 0;
  res.std_error = 0.0;
  res.bits_per_dim =
      bits_per_dim_from_logp(res.logp_nats, dim, config.bpd_offset_bits);
  return res;
}

double prior_cross_entropy(const SdeSpec& spec, const Eigen::VectorXd& x) {
  const TransitionParams p = spec.transition(spec.t_final());
  const double v_prior = spec.prior_var();
  const double dim = static_cast<double>(x.size());
  const double smeared_sq =
      p.alpha * p.alpha * x.squaredNorm() + dim * p.var();
  return 0.5 * dim * std::log(kTwoPi * v_prior) +
         0.5 * smeared_sq / v_prior;
}

namespace {

// Mean of -log pi(x') over n kernel draws; the stochastic counterpart of
// prior_cross_entropy.
double prior_cross_entropy_mc(const SdeSpec& spec, const Eigen::VectorXd& x,
                              int n_draws, Rng& rng, double* std_err) {
  const TransitionParams p = spec.transition(spec.t_final());
  std::vector<double> draws;
  draws.reserve(static_cast<std::size_t>(n_draws));
  for (int k = 0; k < n_draws; ++k) {
    const Eigen::VectorXd xp =
        p.alpha * x + p.sigma * rng.normal_vector(x.size());
    draws.push_back(-spec.prior_logpdf(xp));
  }
  if (std_err) *std_err = stats::std_error(draws);
  return stats::mean(draws);
}

struct TimeSample {
  double t;
  double weight;  // 1 / (N p(t)) including the uniform-range factor
};

std::vector<TimeSample> draw_time_samples(const SdeSpec& spec,
                                          const BoundConfig& config,
                                          const TimeProposal* proposal,
                                          Rng& rng) {
  const int n = config.n_time_samples;
  if (n <= 0) {
    throw std::invalid_argument("bound: n_time_samples must be positive");
  }
  std::vector<TimeSample> out;
  out.reserve(static_cast<std::size_t>(n));
  const double offset =
      config.time_sampling == TimeSampling::Stratified ? rng.uniform() : -1.0;
  for (int j = 0; j < n; ++j) {
    const double u = config.time_sampling == TimeSampling::Stratified
                         ? (static_cast<double>(j) + offset) / n
                         : rng.uniform();
    TimeSample s{};
    if (config.importance_sampling) {
      s.t = proposal->inverse_cdf(u);
      s.weight = proposal->normalizer() * spec.original_weight(s.t) /
                 spec.diffusion_sq(s.t);
    } else {
      s.t = spec.epsilon() + u * (spec.t_final() - spec.epsilon());
      s.weight = spec.t_final() - spec.epsilon();
    }
    out.push_back(s);
  }
  return out;
}

// Standard error of the mean of contributions. For stratified samples the
// plain variance would count the systematic sweep across the time axis as
// noise, so neighbor differences are used there instead.
double contributions_std_error(const std::vector<double>& c,
                               TimeSampling sampling) {
  const std::size_t n = c.size();
  if (n < 2) return 0.0;
  if (sampling == TimeSampling::Independent) {
    return stats::std_error(c);
  }
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double d = c[j + 1] - c[j];
    acc += d * d;
  }
  const double var = acc / (2.0 * static_cast<double>(n - 1));
  return std::sqrt(var / static_cast<double>(n));
}

// Kernel expectation of g^2 (|s - k|^2 - |k|^2) - 2 div f at time t, where
// k is the kernel score. Closed form for the analytic model.
double dsm_integrand_closed(const AnalyticGaussianScore& m, const SdeSpec& spec,
                            const Eigen::VectorXd& x, double t) {
  const TransitionParams p = spec.transition(t);
  const double a = p.alpha;
  const double s2 = p.var();
  const double g2 = spec.diffusion_sq(t);
  double acc = 0.0;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    const double w = a * a * m.var0[d] + s2;
    const double bias = m.offset.size() ? m.offset[d] : 0.0;
    const double c = a * (m.mean0[d] - x[d]) / w + bias;
    const double slope = a * a * m.var0[d] / (p.sigma * w);
    acc += c * c + slope * slope - 1.0 / s2;
  }
  return g2 * acc - 2.0 * spec.drift_divergence(t, x.size());
}

double dsm_integrand_mc(const ScoreModel& model, const SdeSpec& spec,
                        const Eigen::VectorXd& x, double t, int n_inner,
                        Rng& rng) {
  const double g2 = spec.diffusion_sq(t);
  double acc = 0.0;
  for (int i = 0; i < n_inner; ++i) {
    const DsmDraw draw = dsm_draw(spec, x, t, rng);
    const Eigen::VectorXd s = score(model, spec, draw.x_perturbed, t);
    acc += (s - draw.target).squaredNorm() - draw.target.squaredNorm();
  }
  return g2 * acc / n_inner - 2.0 * spec.drift_divergence(t, x.size());
}

// Kernel expectation of 2 g^2 div s + g^2 |s|^2 - 2 div f.
double sm_integrand_closed(const AnalyticGaussianScore& m, const SdeSpec& spec,
                           const Eigen::VectorXd& x, double t) {
  const TransitionParams p = spec.transition(t);
  const double a = p.alpha;
  const double s2 = p.var();
  const double g2 = spec.diffusion_sq(t);
  double acc = 0.0;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    const double w = a * a * m.var0[d] + s2;
    const double bias = m.offset.size() ? m.offset[d] : 0.0;
    const double c = a * (m.mean0[d] - x[d]) / w + bias;
    acc += -2.0 / w + c * c + s2 / (w * w);
  }
  return g2 * acc - 2.0 * spec.drift_divergence(t, x.size());
}

double sm_integrand_mc(const ScoreModel& model, const SdeSpec& spec,
                       const Eigen::VectorXd& x, double t, int n_inner,
                       const DivergenceConfig& div_config, Rng& rng) {
  const double g2 = spec.diffusion_sq(t);
  const TransitionParams p = spec.transition(t);
  double acc = 0.0;
  for (int i = 0; i < n_inner; ++i) {
    const Eigen::VectorXd xp =
        p.alpha * x + p.sigma * rng.normal_vector(x.size());
    const Eigen::VectorXd s = score(model, spec, xp, t);
    const double div = score_divergence(model, spec, xp, t, div_config, &rng);
    acc += 2.0 * div + s.squaredNorm();
  }
  return g2 * acc / n_inner - 2.0 * spec.drift_divergence(t, x.size());
}

enum class BoundForm { Dsm, Sm };

LikelihoodResult bound_impl(const ScoreModel& model, const SdeSpec& spec,
                            const Eigen::VectorXd& x,
                            const BoundConfig& config, BoundForm form,
                            Rng& rng) {
  if (x.size() != model_dim(model)) {
    throw std::invalid_argument("bound: dimension mismatch");
  }
  if (config.n_inner <= 0) {
    throw std::invalid_argument("bound: n_inner must be positive");
  }
  const auto* analytic = std::get_if<AnalyticGaussianScore>(&model);

  std::optional<TimeProposal> proposal;
  if (config.importance_sampling) proposal.emplace(spec);
  const std::vector<TimeSample> times =
      draw_time_samples(spec, config, proposal ? &*proposal : nullptr, rng);

  std::vector<double> contributions;
  contributions.reserve(times.size());
  for (const TimeSample& ts : times) {
    double integrand;
    if (analytic) {
      integrand = form == BoundForm::Dsm
                      ? dsm_integrand_closed(*analytic, spec, x, ts.t)
                      : sm_integrand_closed(*analytic, spec, x, ts.t);
    } else {
      integrand =
          form == BoundForm::Dsm
              ? dsm_integrand_mc(model, spec, x, ts.t, config.n_inner, rng)
              : sm_integrand_mc(model, spec, x, ts.t, config.n_inner,
                                config.divergence, rng);
    }
    contributions.push_back(0.5 * ts.weight * integrand);
  }

  double prior_se = 0.0;
  const double prior_term =
      config.prior_term == PriorTermMode::ClosedForm
          ? prior_cross_entropy(spec, x)
          : prior_cross_entropy_mc(spec, x, config.n_prior_draws, rng,
                                   &prior_se);

  const double integral = stats::mean(contributions);
  const double integral_se =
      contributions_std_error(contributions, config.time_sampling);
  const double upper_bound_neg_logp = prior_term + integral;

  LikelihoodResult res;
  res.kind =
      form == BoundForm::Dsm ? LikelihoodKind::BoundDsm : LikelihoodKind::BoundSm;
  res.logp_nats = -upper_bound_neg_logp;
  res.n_time_samples = config.n_time_samples;
  res.std_error = std::sqrt(integral_se * integral_se + prior_se * prior_se);
  res.bits_per_dim =
      bits_per_dim_from_logp(res.logp_nats, x.size(), config.bpd_offset_bits);
  return res;
}

}  // namespace

LikelihoodResult bound_dsm(const ScoreModel& model, const SdeSpec& spec,
                           const Eigen::VectorXd& x, const BoundConfig& config,
                           Rng& rng) {
  return bound_impl(model, spec, x, config, BoundForm::Dsm, rng);
}

LikelihoodResult bound_sm(const ScoreModel& model, const SdeSpec& spec,
                          const Eigen::VectorXd& x, const BoundConfig& config,
                          Rng& rng) {
  return bound_impl(model, spec, x, config, BoundForm::Sm, rng);
}

LikelihoodResult tweedie_corrected_bound(const ScoreModel& model,
                                         const SdeSpec& spec,
                                         const Eigen::VectorXd& x,
                                         const BoundConfig& config,
                                         int n_eps_draws, Rng& rng) {
  if (n_eps_draws <= 0) {
    throw std::invalid_argument("tweedie_corrected_bound: need draws");
  }
  const TransitionParams p = spec.transition(spec.epsilon());
  if (p.sigma < SdeSpec::kSigmaFloor) {
    throw DegenerateTransitionError(
        "tweedie_corrected_bound: kernel at epsilon is degenerate");
  }
  LikelihoodResult base = bound_dsm(model, spec, x, config, rng);

  // Correction: -E[log q(x | x') - log p_eps(x' | x)] with x' a kernel draw
  // and q the Gaussian denoising posterior implied by the score at epsilon.
  const double a = p.alpha;
  const double s2 = p.var();
  std::vector<double> draws;
  draws.reserve(static_cast<std::size_t>(n_eps_draws));
  for (int k = 0; k < n_eps_draws; ++k) {
    const Eigen::VectorXd z = rng.normal_vector(x.size());
    const Eigen::VectorXd xp = a * x + p.sigma * z;
    const Eigen::VectorXd s = score(model, spec, xp, spec.epsilon());
    const Eigen::VectorXd q_mean = xp / a + (s2 / a) * s;
    const double mismatch = (x - q_mean).squaredNorm();
    draws.push_back(-static_cast<double>(x.size()) * std::log(a) +
                    0.5 * a * a * mismatch / s2 - 0.5 * z.squaredNorm());
  }
  const double corr = stats::mean(draws);
  const double corr_se =
      draws.size() > 1 ? stats::std_error(draws) : 0.0;

  LikelihoodResult res = base;
  res.kind = LikelihoodKind::BoundDsmCorrected;
  res.logp_nats = base.logp_nats - corr;
  res.std_error =
      std::sqrt(base.std_error * base.std_error + corr_se * corr_se);
  res.bits_per_dim =
      bits_per_dim_from_logp(res.logp_nats, x.size(), config.bpd_offset_bits);
  return res;
}

double kl_upper_bound(const ScoreModel& model, const SdeSpec& spec,
                      const GaussianData& data, int n_nodes) {
  const double j_sm = quadrature_sm(model, spec, data,
                                    WeightingScheme::likelihood(), n_nodes);
  // KL of the data marginal at T against the prior, both diagonal Gaussians.
  const TransitionParams p = spec.transition(spec.t_final());
  const double v_prior = spec.prior_var();
  double kl_terminal = 0.0;
  for (Eigen::Index d = 0; d < data.dim(); ++d) {
    const double m = p.alpha * data.mean[d];
    const double v = p.alpha * p.alpha * data.var[d] + p.var();
    kl_terminal +=
        0.5 * (std::log(v_prior / v) + (v + m * m) / v_prior - 1.0);
  }
  return j_sm + kl_terminal;
}

EntropyEstimate entropy_estimate(const ScoreModel& model, const SdeSpec& spec,
                                 const Eigen::MatrixXd& samples,
                                 EntropyForm form, int n_time_nodes,
                                 Rng& rng) {
  const Eigen::Index n = samples.rows();
  const Eigen::Index dim = samples.cols();
  if (n < 2) {
    throw std::invalid_argument("entropy_estimate: need at least two samples");
  }
  if (dim != model_dim(model)) {
    throw std::invalid_argument("entropy_estimate: dimension mismatch");
  }
  if (n_time_nodes < 9 || n_time_nodes % 2 == 0) {
    throw std::invalid_argument(
        "entropy_estimate: n_time_nodes must be odd and >= 9");
  }

  // Terminal entropy: exact marginal for the analytic model, prior entropy
  // as the matched approximation otherwise.
  double h_final;
  if (const auto* g = std::get_if<AnalyticGaussianScore>(&model)) {
    Eigen::VectorXd var;
    analytic_marginal(*g, spec, spec.t_final(), nullptr, &var);
    h_final = 0.0;
    for (Eigen::Index d = 0; d < dim; ++d) {
      h_final += 0.5 * (1.0 + std::log(kTwoPi * var[d]));
    }
  } else {
    h_final = spec.prior_entropy(dim);
  }

  const double lo = spec.epsilon();
  const double hi = spec.t_final();
  const double h = (hi - lo) / static_cast<double>(n_time_nodes - 1);
  std::vector<double> per_sample(static_cast<std::size_t>(n), 0.0);

  for (int k = 0; k < n_time_nodes; ++k) {
    const double t = k == n_time_nodes - 1 ? hi : lo + h * k;
    const double coeff = (k == 0 || k == n_time_nodes - 1) ? 1.0
                         : (k % 2 == 1)                    ? 4.0
                                                           : 2.0;
    const double node_weight = coeff * h / 3.0;
    const TransitionParams p = spec.transition(t);
    const double g2 = spec.diffusion_sq(t);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd xp =
          p.alpha * samples.row(i).transpose() +
          p.sigma * rng.normal_vector(dim);
      const Eigen::VectorXd s = score(model, spec, xp, t);
      double phi;
      if (form == EntropyForm::DriftDotScore) {
        phi = 2.0 * spec.drift(xp, t).dot(s) - g2 * s.squaredNorm();
      } else {
        phi = -(2.0 * spec.drift_divergence(t, dim) + g2 * s.squaredNorm());
      }
      per_sample[static_cast<std::size_t>(i)] += node_weight * phi;
    }
  }

  std::vector<double> totals(per_sample.size());
  for (std::size_t i = 0; i < per_sample.size(); ++i) {
    totals[i] = 0.5 * per_sample[i];
  }

  EntropyEstimate est;
  est.form = form;
  est.value_nats = h_final + stats::mean(totals);
  est.std_error = stats::std_error(totals);
  return est;
}

}  // namespace scorekit
