#include "scorekit/dequant.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

#include "scorekit/errors.hpp"

namespace scorekit {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Density of the standard logistic, which is also the derivative of the
// sigmoid, so the same expression serves the base term and the squash
// log-determinant.
double logistic_logpdf(double z) {
  const double a = std::fabs(z);
  return -a - 2.0 * std::log1p(std::exp(-a));
}

double logit(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw std::invalid_argument("logit: u must lie strictly inside (0, 1)");
  }
  return std::log(u) - std::log1p(-u);
}

void check_discrete(const Eigen::VectorXd& x_disc, int levels) {
  for (Eigen::Index d = 0; d < x_disc.size(); ++d) {
    const double v = x_disc[d];
    if (v != std::floor(v) || v < 0.0 || v >= static_cast<double>(levels)) {
      throw std::invalid_argument(
          "dequantize: entries must be integers in [0, levels)");
    }
  }
}

Eigen::VectorXd draw_logistic_base(Eigen::Index dim, Rng& rng) {
  Eigen::VectorXd base(dim);
  for (Eigen::Index d = 0; d < dim; ++d) {
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    base[d] = logit(u);
  }
  return base;
}

}  // namespace

Eigen::VectorXd uniform_dequantize(const Eigen::VectorXd& x_disc, int levels,
                                   Rng& rng) {
  if (levels < 2) throw std::invalid_argument("uniform_dequantize: levels >= 2");
  check_discrete(x_disc, levels);
  Eigen::VectorXd y(x_disc.size());
  for (Eigen::Index d = 0; d < y.size(); ++d) {
    y[d] = (x_disc[d] + rng.uniform()) / static_cast<double>(levels);
  }
  return y;
}

DequantFlow::DequantFlow(Eigen::Index dim, int levels, DequantFlowConfig config)
    : dim_(dim),
      levels_(levels),
      config_(std::move(config)),
      conditioner_(dim, config_.cond_hidden,
                   2 * static_cast<Eigen::Index>(config_.n_transforms) * dim) {
  if (dim <= 0) throw std::invalid_argument("DequantFlow: dim must be positive");
  if (levels < 2) throw std::invalid_argument("DequantFlow: levels >= 2");
  if (config_.n_transforms < 2 || config_.n_transforms > 4) {
    throw std::invalid_argument("DequantFlow: n_transforms must be 2..4");
  }
  params = Eigen::VectorXd::Zero(conditioner_.param_count());
}

Eigen::VectorXd DequantFlow::conditioner_input(
    const Eigen::VectorXd& x_disc) const {
  check_discrete(x_disc, levels_);
  return (2.0 * (x_disc.array() + 0.5) / static_cast<double>(levels_) - 1.0)
      .matrix();
}

DequantFlow::Pass DequantFlow::forward(const Eigen::VectorXd& x_disc,
                                       const Eigen::VectorXd& base) const {
  if (base.size() != dim_) {
    throw std::invalid_argument("DequantFlow::forward: base length mismatch");
  }
  Pass pass;
  pass.base = base;
  pass.head_out = conditioner_.forward(params, conditioner_input(x_disc));

  Eigen::VectorXd z = base;
  double logdet = 0.0;
  for (int k = 0; k < config_.n_transforms; ++k) {
    const auto scale_log = pass.head_out.segment(2 * k * dim_, dim_);
    const auto shift = pass.head_out.segment((2 * k + 1) * dim_, dim_);
    z = (z.array() * scale_log.array().exp() + shift.array()).matrix();
    logdet += scale_log.sum();
    pass.stages.push_back(z);
  }

  pass.u.resize(dim_);
  double base_logpdf = 0.0;
  for (Eigen::Index d = 0; d < dim_; ++d) {
    pass.u[d] = sigmoid(z[d]);
    logdet += logistic_logpdf(z[d]);
    base_logpdf += logistic_logpdf(base[d]);
  }
  pass.logdet = logdet;
  pass.logq = base_logpdf - logdet;
  return pass;
}

DequantFlow::Sample DequantFlow::sample(const Eigen::VectorXd& x_disc,
                                        Rng& rng) const {
  const Pass pass = forward(x_disc, draw_logistic_base(dim_, rng));
  return Sample{pass.u, pass.logq};
}

DequantFlow::Inverse DequantFlow::inverse(const Eigen::VectorXd& x_disc,
                                          const Eigen::VectorXd& u) const {
  if (u.size() != dim_) {
    throw std::invalid_argument("DequantFlow::inverse: u length mismatch");
  }
  const Eigen::VectorXd head =
      conditioner_.forward(params, conditioner_input(x_disc));
  Eigen::VectorXd z(dim_);
  Inverse inv;
  for (Eigen::Index d = 0; d < dim_; ++d) {
    z[d] = logit(u[d]);
    inv.logdet -= logistic_logpdf(z[d]);
  }
  for (int k = config_.n_transforms - 1; k >= 0; --k) {
    const auto scale_log = head.segment(2 * k * dim_, dim_);
    const auto shift = head.segment((2 * k + 1) * dim_, dim_);
    z = ((z - shift).array() * (-scale_log.array()).exp()).matrix();
    inv.logdet -= scale_log.sum();
  }
  inv.base = z;
  return inv;
}

namespace {

// Tweedie-corrected denoising bound on -log p(y) with optional gradient in
// y. Mirrors the estimator in the likelihood module but keeps every draw
// explicit so the dequantizer can differentiate through its noise sample.
double corrected_bound_at(const ScoreModel& model, const SdeSpec& spec,
                          const Eigen::VectorXd& y, const BoundConfig& bc,
                          int n_eps_draws, Rng& rng, Eigen::VectorXd* grad_y) {
  const Eigen::Index dim = y.size();
  if (grad_y) *grad_y = Eigen::VectorXd::Zero(dim);

  std::optional<TimeProposal> proposal;
  if (bc.importance_sampling) proposal.emplace(spec);

  const int n = bc.n_time_samples;
  if (n <= 0) throw std::invalid_argument("corrected_bound_at: need time samples");
  const double offset =
      bc.time_sampling == TimeSampling::Stratified ? rng.uniform() : -1.0;

  double integral = 0.0;
  for (int j = 0; j < n; ++j) {
    const double u = bc.time_sampling == TimeSampling::Stratified
                         ? (static_cast<double>(j) + offset) / n
                         : rng.uniform();
    double t, weight;
    if (bc.importance_sampling) {
      t = proposal->inverse_cdf(u);
      weight = proposal->normalizer() * spec.original_weight(t) /
               spec.diffusion_sq(t);
    } else {
      t = spec.epsilon() + u * (spec.t_final() - spec.epsilon());
      weight = spec.t_final() - spec.epsilon();
    }
    const TransitionParams p = spec.transition(t);
    const double g2 = spec.diffusion_sq(t);
    for (int i = 0; i < bc.n_inner; ++i) {
      const Eigen::VectorXd z = rng.normal_vector(dim);
      const Eigen::VectorXd xp = p.alpha * y + p.sigma * z;
      const Eigen::VectorXd target = -z / p.sigma;
      const Eigen::VectorXd s = score(model, spec, xp, t);
      const Eigen::VectorXd resid = s - target;
      const double piece =
          g2 * (resid.squaredNorm() - target.squaredNorm()) -
          2.0 * spec.drift_divergence(t, dim);
      integral += 0.5 * weight * piece / (n * bc.n_inner);
      if (grad_y) {
        *grad_y += weight * g2 * p.alpha *
                   score_input_vjp(model, spec, xp, t, resid) /
                   (n * bc.n_inner);
      }
    }
  }

  // Terminal term against the prior, closed form.
  const TransitionParams pT = spec.transition(spec.t_final());
  const double v_prior = spec.prior_var();
  double value = integral + prior_cross_entropy(spec, y);
  if (grad_y) *grad_y += (pT.alpha * pT.alpha / v_prior) * y;

  // Short-time correction.
  const TransitionParams pe = spec.transition(spec.epsilon());
  if (pe.sigma < SdeSpec::kSigmaFloor) {
    throw DegenerateTransitionError(
        "corrected_bound_at: kernel at epsilon is degenerate");
  }
  const double a = pe.alpha;
  const double s2 = pe.var();
  for (int k = 0; k < n_eps_draws; ++k) {
    const Eigen::VectorXd z = rng.normal_vector(dim);
    const Eigen::VectorXd xp = a * y + pe.sigma * z;
    const Eigen::VectorXd s = score(model, spec, xp, spec.epsilon());
    const Eigen::VectorXd q_mean = xp / a + (s2 / a) * s;
    const Eigen::VectorXd gap = y - q_mean;
    value += (-static_cast<double>(dim) * std::log(a) +
              0.5 * a * a * gap.squaredNorm() / s2 - 0.5 * z.squaredNorm()) /
             n_eps_draws;
    if (grad_y) {
      *grad_y += -a * a *
                 score_input_vjp(model, spec, xp, spec.epsilon(), gap) /
                 n_eps_draws;
    }
  }
  return value;
}

}  // namespace

double var_deq_objective(const DequantFlow& flow, const ScoreModel& model,
                         const SdeSpec& spec, const Eigen::VectorXd& x_disc,
                         Rng rng, const VarDeqConfig& config) {
  if (flow.dim() != model_dim(model)) {
    throw std::invalid_argument("var_deq_objective: dimension mismatch");
  }
  const Eigen::VectorXd base = draw_logistic_base(flow.dim(), rng);
  const DequantFlow::Pass pass = flow.forward(x_disc, base);
  const Eigen::VectorXd y =
      (x_disc + pass.u) / static_cast<double>(flow.levels());
  const double bound = corrected_bound_at(model, spec, y, config.bound,
                                          config.n_eps_draws, rng, nullptr);
  return bound + pass.logq;
}

double uniform_deq_objective(const ScoreModel& model, const SdeSpec& spec,
                             const Eigen::VectorXd& x_disc, int levels,
                             Rng rng, const VarDeqConfig& config) {
  const Eigen::Index dim = model_dim(model);
  if (x_disc.size() != dim) {
    throw std::invalid_argument("uniform_deq_objective: dimension mismatch");
  }
  if (levels < 2) throw std::invalid_argument("uniform_deq_objective: levels >= 2");
  check_discrete(x_disc, levels);
  const Eigen::VectorXd base = draw_logistic_base(dim, rng);
  Eigen::VectorXd u(dim);
  for (Eigen::Index d = 0; d < dim; ++d) u[d] = sigmoid(base[d]);
  const Eigen::VectorXd y = (x_disc + u) / static_cast<double>(levels);
  return corrected_bound_at(model, spec, y, config.bound, config.n_eps_draws,
                            rng, nullptr);
}

Eigen::VectorXd var_deq_objective_grad(const DequantFlow& flow,
                                       const ScoreModel& model,
                                       const SdeSpec& spec,
                                       const Eigen::VectorXd& x_disc, Rng rng,
                                       const VarDeqConfig& config,
                                       double* value_out) {
  if (flow.dim() != model_dim(model)) {
    throw std::invalid_argument("var_deq_objective_grad: dimension mismatch");
  }
  const Eigen::Index dim = flow.dim();
  const Eigen::VectorXd base = draw_logistic_base(dim, rng);
  const DequantFlow::Pass pass = flow.forward(x_disc, base);
  const double levels = static_cast<double>(flow.levels());
  const Eigen::VectorXd y = (x_disc + pass.u) / levels;

  Eigen::VectorXd grad_y;
  const double bound = corrected_bound_at(model, spec, y, config.bound,
                                          config.n_eps_draws, rng, &grad_y);
  if (value_out) *value_out = bound + pass.logq;

  // Through u = sigmoid(z_K) and the log-det term of the squash.
  const Eigen::ArrayXd u_arr = pass.u.array();
  const Eigen::ArrayXd sig_prime = u_arr * (1.0 - u_arr);
  Eigen::ArrayXd g_z =
      grad_y.array() / levels * sig_prime + (2.0 * u_arr - 1.0);

  const int n_tr = flow.config().n_transforms;
  Eigen::VectorXd head_upstream = Eigen::VectorXd::Zero(2 * n_tr * dim);
  for (int k = n_tr - 1; k >= 0; --k) {
    const Eigen::ArrayXd scale_log =
        pass.head_out.segment(2 * k * dim, dim).array();
    const Eigen::ArrayXd z_prev =
        (k == 0 ? pass.base : pass.stages[static_cast<std::size_t>(k - 1)])
            .array();
    const Eigen::ArrayXd e = scale_log.exp();
    // d objective / d scale_log: chain through z_k plus the -sum(scale_log)
    // term of log q.
    head_upstream.segment(2 * k * dim, dim) =
        (g_z * z_prev * e - 1.0).matrix();
    head_upstream.segment((2 * k + 1) * dim, dim) = g_z.matrix();
    g_z *= e;
  }

  return flow.conditioner().param_grad(flow.params,
                                       flow.conditioner_input(x_disc),
                                       head_upstream);
}

}  // namespace scorekit
