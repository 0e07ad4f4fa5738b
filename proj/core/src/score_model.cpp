#include "scorekit/score_model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "scorekit/errors.hpp"

namespace scorekit {

Eigen::VectorXd TimeEmbedding::embed(double t) const {
  if (!(t > 0.0)) {
    throw std::invalid_argument("TimeEmbedding: t must be positive");
  }
  Eigen::VectorXd out(dim());
  const double u = scale * std::log(t);
  double freq = 1.0;
  for (int k = 0; k < num_frequencies; ++k) {
    out[2 * k] = std::sin(freq * u);
    out[2 * k + 1] = std::cos(freq * u);
    freq *= 2.0;
  }
  return out;
}

void AnalyticGaussianScore::validate() const {
  if (mean0.size() == 0 || var0.size() != mean0.size()) {
    throw std::invalid_argument(
        "AnalyticGaussianScore: mean0/var0 must be nonempty and equal length");
  }
  if ((var0.array() <= 0.0).any()) {
    throw std::invalid_argument("AnalyticGaussianScore: var0 must be positive");
  }
  if (offset.size() != 0 && offset.size() != mean0.size()) {
    throw std::invalid_argument("AnalyticGaussianScore: offset length mismatch");
  }
}

void analytic_marginal(const AnalyticGaussianScore& model, const SdeSpec& spec,
                       double t, Eigen::VectorXd* mean, Eigen::VectorXd* var) {
  const TransitionParams p = spec.transition(t);
  if (mean) *mean = p.alpha * model.mean0;
  if (var) *var = (p.alpha * p.alpha * model.var0.array() + p.var()).matrix();
}

MlpScore::MlpScore(Eigen::Index dim, MlpScoreConfig config)
    : dim_(dim),
      config_(std::move(config)),
      embedding_{config_.num_frequencies, config_.embed_scale},
      net_(dim + embedding_.dim(), config_.hidden, dim) {
  if (dim <= 0) throw std::invalid_argument("MlpScore: dim must be positive");
  params = Eigen::VectorXd::Zero(net_.param_count());
}

Eigen::VectorXd MlpScore::net_input(const Eigen::VectorXd& x, double t) const {
  if (x.size() != dim_) {
    throw std::invalid_argument("MlpScore: input dimension mismatch");
  }
  Eigen::VectorXd in(net_.in_dim());
  in.head(dim_) = x;
  in.tail(embedding_.dim()) = embedding_.embed(t);
  return in;
}

Eigen::Index model_dim(const ScoreModel& model) {
  return std::visit([](const auto& m) { return m.dim(); }, model);
}

namespace {

double kernel_sigma_checked(const SdeSpec& spec, double t, const char* where) {
  const double sigma = spec.transition(t).sigma;
  if (sigma < SdeSpec::kSigmaFloor) {
    std::ostringstream msg;
    msg << where << ": kernel at t=" << t << " is degenerate";
    throw DegenerateTransitionError(msg.str());
  }
  return sigma;
}

}  // namespace

Eigen::VectorXd score(const ScoreModel& model, const SdeSpec& spec,
                      const Eigen::VectorXd& x, double t) {
  if (const auto* g = std::get_if<AnalyticGaussianScore>(&model)) {
    Eigen::VectorXd mean, var;
    analytic_marginal(*g, spec, t, &mean, &var);
    Eigen::VectorXd s = ((mean - x).array() / var.array()).matrix();
    if (g->offset.size() != 0) s += g->offset;
    return s;
  }
  const auto& m = std::get<MlpScore>(model);
  const double sigma = kernel_sigma_checked(spec, t, "score");
  return m.net().forward(m.params, m.net_input(x, t)) / sigma;
}

Eigen::VectorXd score_input_jvp(const ScoreModel& model, const SdeSpec& spec,
                                const Eigen::VectorXd& x, double t,
                                const Eigen::VectorXd& v) {
  if (const auto* g = std::get_if<AnalyticGaussianScore>(&model)) {
    Eigen::VectorXd var;
    analytic_marginal(*g, spec, t, nullptr, &var);
    return (-v.array() / var.array()).matrix();
  }
  const auto& m = std::get<MlpScore>(model);
  const double sigma = kernel_sigma_checked(spec, t, "score_input_jvp");
  Eigen::VectorXd dir = Eigen::VectorXd::Zero(m.net().in_dim());
  dir.head(m.dim()) = v;
  return m.net().input_jvp(m.params, m.net_input(x, t), dir) / sigma;
}

Eigen::VectorXd score_input_vjp(const ScoreModel& model, const SdeSpec& spec,
                                const Eigen::VectorXd& x, double t,
                                const Eigen::VectorXd& upstream) {
  if (const auto* g = std::get_if<AnalyticGaussianScore>(&model)) {
    Eigen::VectorXd var;
    analytic_marginal(*g, spec, t, nullptr, &var);
    return (-upstream.array() / var.array()).matrix();
  }
  const auto& m = std::get<MlpScore>(model);
  const double sigma = kernel_sigma_checked(spec, t, "score_input_vjp");
  Eigen::VectorXd full =
      m.net().input_vjp(m.params, m.net_input(x, t), upstream) / sigma;
  return full.head(m.dim());
}

double score_divergence_exact(const ScoreModel& model, const SdeSpec& spec,
                              const Eigen::VectorXd& x, double t) {
  if (const auto* g = std::get_if<AnalyticGaussianScore>(&model)) {
    Eigen::VectorXd var;
    analytic_marginal(*g, spec, t, nullptr, &var);
    return -(1.0 / var.array()).sum();
  }
  const auto& m = std::get<MlpScore>(model);
  const double sigma = kernel_sigma_checked(spec, t, "score_divergence_exact");
  const Eigen::VectorXd in = m.net_input(x, t);
  Eigen::VectorXd dir = Eigen::VectorXd::Zero(m.net().in_dim());
  double trace = 0.0;
  for (Eigen::Index d = 0; d < m.dim(); ++d) {
    dir[d] = 1.0;
    trace += m.net().input_jvp(m.params, in, dir)[d];
    dir[d] = 0.0;
  }
  return trace / sigma;
}

Eigen::VectorXd score_param_grad(const MlpScore& model, const SdeSpec& spec,
                                 const Eigen::VectorXd& x, double t,
                                 const Eigen::VectorXd& upstream) {
  const double sigma = kernel_sigma_checked(spec, t, "score_param_grad");
  return model.net().param_grad(model.params, model.net_input(x, t),
                                upstream / sigma);
}

}  // namespace scorekit
