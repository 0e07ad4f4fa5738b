#include "scorekit/objectives.hpp"

#include <cmath>
#include <stdexcept>

#include "scorekit/errors.hpp"

namespace scorekit {

const char* to_string(TimeProposalKind kind) {
  return kind == TimeProposalKind::UniformTime ? "uniform" : "importance";
}

namespace {

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace

TimeProposal::TimeProposal(const SdeSpec& spec) : spec_(spec) {
  f_lo_ = antideriv(spec_.epsilon());
  f_hi_ = antideriv(spec_.t_final());
  normalizer_ = f_hi_ - f_lo_;
  if (!(normalizer_ > 0.0) || !std::isfinite(normalizer_)) {
    throw NumericalError("TimeProposal: degenerate normalizer");
  }
}

double TimeProposal::antideriv(double t) const {
  switch (spec_.kind()) {
    case SdeKind::VE:
      // ratio g^2 / original weight is identically 1
      return t;
    case SdeKind::VP:
      // integral of beta / (1 - exp(-B)) is log(exp(B) - 1)
      return std::log(std::expm1(spec_.beta_integral(t)));
    case SdeKind::SubVP:
      // ratio is beta coth(B/2), integral 2 log sinh(B/2)
      return 2.0 * std::log(std::sinh(0.5 * spec_.beta_integral(t)));
  }
  return 0.0;
}

double TimeProposal::antideriv_inverse(double f) const {
  switch (spec_.kind()) {
    case SdeKind::VE:
      return f;
    case SdeKind::VP:
      return spec_.beta_integral_inverse(softplus(f));
    case SdeKind::SubVP:
      return spec_.beta_integral_inverse(2.0 * std::asinh(std::exp(0.5 * f)));
  }
  return f;
}

double TimeProposal::pdf(double t) const {
  if (t < spec_.epsilon() || t > spec_.t_final()) return 0.0;
  return spec_.diffusion_sq(t) / (spec_.original_weight(t) * normalizer_);
}

double TimeProposal::cdf(double t) const {
  if (t <= spec_.epsilon()) return 0.0;
  if (t >= spec_.t_final()) return 1.0;
  return (antideriv(t) - f_lo_) / normalizer_;
}

double TimeProposal::inverse_cdf(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) {
    throw std::invalid_argument("TimeProposal::inverse_cdf: u outside [0, 1]");
  }
  const double t = antideriv_inverse(f_lo_ + u * normalizer_);
  // Clamp roundoff drift at the interval ends.
  return std::min(std::max(t, spec_.epsilon()), spec_.t_final());
}

DsmDraw dsm_draw(const SdeSpec& spec, const Eigen::VectorXd& x0, double t,
                 Rng& rng) {
  const TransitionParams p = spec.transition(t);
  DsmDraw draw;
  draw.t = t;
  draw.x_perturbed = p.alpha * x0 + p.sigma * rng.normal_vector(x0.size());
  draw.target = spec.transition_score(x0, draw.x_perturbed, t);
  return draw;
}

double dsm_pair_loss(const ScoreModel& model, const SdeSpec& spec,
                     const Eigen::VectorXd& x0, double t, Rng& rng) {
  const DsmDraw draw = dsm_draw(spec, x0, t, rng);
  const Eigen::VectorXd s = score(model, spec, draw.x_perturbed, t);
  return 0.5 * (s - draw.target).squaredNorm();
}

double dsm_loss_at(const ScoreModel& model, const SdeSpec& spec,
                   const Eigen::VectorXd& x0, double t,
                   const WeightingScheme& scheme, Rng& rng) {
  return spec.weighting(scheme, t) * dsm_pair_loss(model, spec, x0, t, rng);
}

double sm_loss_at(const ScoreModel& model, const SdeSpec& spec,
                  const Eigen::VectorXd& pt_mean, const Eigen::VectorXd& pt_var,
                  double t, const WeightingScheme& scheme, Rng& rng) {
  if (pt_mean.size() != pt_var.size()) {
    throw std::invalid_argument("sm_loss_at: mean/var length mismatch");
  }
  const Eigen::VectorXd x =
      pt_mean + (pt_var.array().sqrt() * rng.normal_vector(pt_mean.size()).array())
                    .matrix();
  const Eigen::VectorXd truth = ((pt_mean - x).array() / pt_var.array()).matrix();
  const Eigen::VectorXd s = score(model, spec, x, t);
  return 0.5 * spec.weighting(scheme, t) * (s - truth).squaredNorm();
}

ObjectiveEstimate mc_objective_uniform(const ScoreModel& model,
                                       const SdeSpec& spec,
                                       const Eigen::MatrixXd& batch,
                                       const WeightingScheme& scheme, Rng& rng,
                                       const ObjectiveOptions& opts) {
  if (batch.rows() == 0) {
    throw std::invalid_argument("mc_objective_uniform: empty batch");
  }
  const double range = spec.t_final() - spec.epsilon();
  ObjectiveEstimate est;
  est.proposal = TimeProposalKind::UniformTime;
  double t = rng.uniform(spec.epsilon(), spec.t_final());
  double acc = 0.0;
  double t_acc = 0.0;
  double weight = spec.weighting(scheme, t);
  for (Eigen::Index i = 0; i < batch.rows(); ++i) {
    if (!opts.shared_time && i > 0) {
      t = rng.uniform(spec.epsilon(), spec.t_final());
      weight = spec.weighting(scheme, t);
    }
    acc += range * weight * dsm_pair_loss(model, spec, batch.row(i).transpose(), t, rng);
    t_acc += t;
  }
  est.value = acc / static_cast<double>(batch.rows());
  est.t = t_acc / static_cast<double>(batch.rows());
  est.weight_applied = range * weight;
  return est;
}

ObjectiveEstimate mc_objective_importance(const ScoreModel& model,
                                          const SdeSpec& spec,
                                          const Eigen::MatrixXd& batch,
                                          const TimeProposal& proposal,
                                          Rng& rng,
                                          const ObjectiveOptions& opts) {
  if (batch.rows() == 0) {
    throw std::invalid_argument("mc_objective_importance: empty batch");
  }
  ObjectiveEstimate est;
  est.proposal = TimeProposalKind::ImportanceSampled;
  double t = proposal.sample(rng);
  double weight = proposal.normalizer() * spec.original_weight(t);
  double acc = 0.0;
  double t_acc = 0.0;
  for (Eigen::Index i = 0; i < batch.rows(); ++i) {
    if (!opts.shared_time && i > 0) {
      t = proposal.sample(rng);
      weight = proposal.normalizer() * spec.original_weight(t);
    }
    acc += weight * dsm_pair_loss(model, spec, batch.row(i).transpose(), t, rng);
    t_acc += t;
  }
  est.value = acc / static_cast<double>(batch.rows());
  est.t = t_acc / static_cast<double>(batch.rows());
  est.weight_applied = weight;
  return est;
}

double dsm_node_value(const AnalyticGaussianScore& model, const SdeSpec& spec,
                      const GaussianData& data, const WeightingScheme& scheme,
                      double t) {
  const TransitionParams p = spec.transition(t);
  const double a = p.alpha;
  const double s2 = p.var();
  const double lambda = spec.weighting(scheme, t);
  double acc = 0.0;
  for (Eigen::Index d = 0; d < data.dim(); ++d) {
    const double w = a * a * model.var0[d] + s2;
    const double bias = model.offset.size() ? model.offset[d] : 0.0;
    const double mean_gap = a * (model.mean0[d] - data.mean[d]) / w + bias;
    const double data_spread = a * a * data.var[d] / (w * w);
    const double kernel_term =
        a * a * a * a * model.var0[d] * model.var0[d] / (s2 * w * w);
    acc += mean_gap * mean_gap + data_spread + kernel_term;
  }
  return 0.5 * lambda * acc;
}

double sm_node_value(const AnalyticGaussianScore& model, const SdeSpec& spec,
                     const GaussianData& data, const WeightingScheme& scheme,
                     double t) {
  const TransitionParams p = spec.transition(t);
  const double a = p.alpha;
  const double s2 = p.var();
  const double lambda = spec.weighting(scheme, t);
  double acc = 0.0;
  for (Eigen::Index d = 0; d < data.dim(); ++d) {
    const double w = a * a * model.var0[d] + s2;
    const double vt = a * a * data.var[d] + s2;
    const double bias = model.offset.size() ? model.offset[d] : 0.0;
    const double mean_gap = a * (model.mean0[d] - data.mean[d]) / w + bias;
    const double var_gap = (w - vt) * (w - vt) / (vt * w * w);
    acc += mean_gap * mean_gap + var_gap;
  }
  return 0.5 * lambda * acc;
}

namespace {

void check_quadrature_args(const ScoreModel& model, const GaussianData& data,
                           int n_nodes) {
  data.validate();
  if (n_nodes < 9 || n_nodes % 2 == 0) {
    throw std::invalid_argument("quadrature: n_nodes must be odd and >= 9");
  }
  if (!std::holds_alternative<AnalyticGaussianScore>(model)) {
    throw UnsupportedError(
        "quadrature: closed-form inner expectation needs the analytic model; "
        "use the Monte Carlo estimators for trainable models");
  }
  if (model_dim(model) != data.dim()) {
    throw std::invalid_argument("quadrature: model/data dimension mismatch");
  }
}

template <typename NodeFn>
double simpson_over_time(const SdeSpec& spec, int n_nodes, NodeFn&& node) {
  const double lo = spec.epsilon();
  const double hi = spec.t_final();
  const double h = (hi - lo) / static_cast<double>(n_nodes - 1);
  double acc = 0.0;
  for (int i = 0; i < n_nodes; ++i) {
    const double t = i == n_nodes - 1 ? hi : lo + h * i;
    const double coeff = (i == 0 || i == n_nodes - 1) ? 1.0
                         : (i % 2 == 1)               ? 4.0
                                                      : 2.0;
    acc += coeff * node(t);
  }
  return acc * h / 3.0;
}

}  // namespace

double quadrature_dsm(const ScoreModel& model, const SdeSpec& spec,
                      const GaussianData& data, const WeightingScheme& scheme,
                      int n_nodes) {
  check_quadrature_args(model, data, n_nodes);
  const auto& m = std::get<AnalyticGaussianScore>(model);
  return simpson_over_time(spec, n_nodes, [&](double t) {
    return dsm_node_value(m, spec, data, scheme, t);
  });
}

double quadrature_sm(const ScoreModel& model, const SdeSpec& spec,
                     const GaussianData& data, const WeightingScheme& scheme,
                     int n_nodes) {
  check_quadrature_args(model, data, n_nodes);
  const auto& m = std::get<AnalyticGaussianScore>(model);
  return simpson_over_time(spec, n_nodes, [&](double t) {
    return sm_node_value(m, spec, data, scheme, t);
  });
}

}  // namespace scorekit
