#include "scorekit/training.hpp"

#include <cmath>
#include <sstream>
#include <variant>

#include "scorekit/errors.hpp"

namespace scorekit {

namespace {

// Stream labels for the independent sources of randomness.
constexpr std::uint64_t kInitStream = 0x696e6974;  // weights
constexpr std::uint64_t kStepStream = 0x73746570;  // per-step noise

void clip_global_norm(Eigen::VectorXd* grad, double max_norm) {
  if (max_norm <= 0.0) return;
  const double norm = grad->norm();
  if (norm > max_norm) *grad *= max_norm / norm;
}

}  // namespace

void AdamState::step(const AdamConfig& config, const Eigen::VectorXd& grad,
                     Eigen::VectorXd* params) {
  if (grad.size() != m_.size() || params->size() != m_.size()) {
    throw std::invalid_argument("AdamState: size mismatch");
  }
  ++t_;
  m_ = config.beta1 * m_ + (1.0 - config.beta1) * grad;
  v_ = config.beta2 * v_ +
       (1.0 - config.beta2) * grad.array().square().matrix();
  const double bc1 = 1.0 - std::pow(config.beta1, t_);
  const double bc2 = 1.0 - std::pow(config.beta2, t_);
  params->array() -= config.lr * (m_.array() / bc1) /
                     ((v_.array() / bc2).sqrt() + config.eps);
}

TrainResult train_score_model(const SdeSpec& spec, const Dataset& data,
                              const MlpScoreConfig& arch,
                              const TrainConfig& config) {
  if (config.steps <= 0 || config.batch_size <= 0) {
    throw std::invalid_argument("train_score_model: steps and batch_size > 0");
  }
  if (config.proposal == TimeProposalKind::ImportanceSampled &&
      config.scheme.blend != 1.0) {
    throw std::invalid_argument(
        "train_score_model: the importance proposal estimates the "
        "likelihood-weighted objective; use blend = 1");
  }
  const Eigen::Index dim = data.dim();
  MlpScore model(dim, arch);
  Rng root(config.seed);
  {
    Rng init_rng = root.fork(kInitStream);
    model.init(init_rng, config.init_final_scale);
  }
  ScoreModel as_variant = model;  // cheap view for the shared entry points

  const TimeProposal proposal(spec);
  AdamState adam(model.params.size());
  TrainResult result{std::move(model), {}};
  result.history.reserve(static_cast<std::size_t>(config.steps));
  MlpScore& live = result.model;

  for (int step = 0; step < config.steps; ++step) {
    const Eigen::MatrixXd batch =
        sample_batch(data, config.batch_size, static_cast<std::uint64_t>(step));
    Rng rng = root.fork(kStepStream).fork(static_cast<std::uint64_t>(step));

    std::get<MlpScore>(as_variant).params = live.params;

    double t = 0.0;
    double weight = 0.0;
    auto redraw_time = [&]() {
      if (config.proposal == TimeProposalKind::ImportanceSampled) {
        t = proposal.sample(rng);
        weight = proposal.normalizer() * spec.original_weight(t);
      } else {
        t = rng.uniform(spec.epsilon(), spec.t_final());
        weight = (spec.t_final() - spec.epsilon()) *
                 spec.weighting(config.scheme, t);
      }
    };
    redraw_time();

    double loss_acc = 0.0;
    double t_acc = 0.0;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(live.params.size());
    for (int i = 0; i < config.batch_size; ++i) {
      if (!config.shared_time && i > 0) redraw_time();
      const DsmDraw draw =
          dsm_draw(spec, batch.row(i).transpose(), t, rng);
      const Eigen::VectorXd s =
          score(as_variant, spec, draw.x_perturbed, t);
      const Eigen::VectorXd resid = s - draw.target;
      loss_acc += weight * 0.5 * resid.squaredNorm();
      grad += weight * score_param_grad(live, spec, draw.x_perturbed, t,
                                        resid);
      t_acc += t;
    }
    const double inv_b = 1.0 / static_cast<double>(config.batch_size);
    const double loss = loss_acc * inv_b;
    grad *= inv_b;

    if (!std::isfinite(loss) || !grad.allFinite()) {
      std::ostringstream msg;
      msg << "train_score_model: non-finite loss at step " << step
          << " (t=" << t << ", weight=" << weight << ", loss=" << loss << ")";
      throw NumericalError(msg.str());
    }

    clip_global_norm(&grad, config.grad_clip);
    adam.step(config.adam, grad, &live.params);

    const int every = config.eval_every > 0 ? config.eval_every : 1;
    if (step % every == 0 || step + 1 == config.steps) {
      ObjectiveEstimate est;
      est.value = loss;
      est.t = t_acc * inv_b;
      est.weight_applied = weight;
      est.proposal = config.proposal;
      result.history.push_back(est);
    }
  }
  return result;
}

DequantTrainResult train_dequant_flow(const SdeSpec& spec,
                                      const ScoreModel& frozen_model,
                                      const Dataset& discrete_data,
                                      const DequantFlowConfig& arch,
                                      const DequantTrainConfig& config) {
  if (config.steps <= 0 || config.batch_size <= 0) {
    throw std::invalid_argument("train_dequant_flow: steps and batch_size > 0");
  }
  const auto* img = std::get_if<DiscreteImageData>(&discrete_data.dist);
  if (!img) {
    throw std::invalid_argument(
        "train_dequant_flow: dataset must be discrete images");
  }
  DequantFlow flow(discrete_data.dim(), img->levels, arch);
  Rng root(config.seed);
  {
    Rng init_rng = root.fork(kInitStream);
    flow.init(init_rng);
  }

  AdamState adam(flow.params.size());
  DequantTrainResult result{std::move(flow), {}};
  result.history.reserve(static_cast<std::size_t>(config.steps));
  DequantFlow& live = result.flow;

  for (int step = 0; step < config.steps; ++step) {
    const Eigen::MatrixXd batch = sample_batch(
        discrete_data, config.batch_size, static_cast<std::uint64_t>(step));
    Rng step_rng = root.fork(kStepStream).fork(static_cast<std::uint64_t>(step));

    double value_acc = 0.0;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(live.params.size());
    for (int i = 0; i < config.batch_size; ++i) {
      double value = 0.0;
      grad += var_deq_objective_grad(
          live, frozen_model, spec, batch.row(i).transpose(),
          step_rng.fork(static_cast<std::uint64_t>(i)), config.objective,
          &value);
      value_acc += value;
    }
    const double inv_b = 1.0 / static_cast<double>(config.batch_size);
    const double value = value_acc * inv_b;
    grad *= inv_b;

    if (!std::isfinite(value) || !grad.allFinite()) {
      std::ostringstream msg;
      msg << "train_dequant_flow: non-finite objective at step " << step
          << " (value=" << value << ")";
      throw NumericalError(msg.str());
    }

    clip_global_norm(&grad, config.grad_clip);
    adam.step(config.adam, grad, &live.params);
    result.history.push_back(value);
  }
  return result;
}

}  // namespace scorekit
