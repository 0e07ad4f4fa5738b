#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "scorekit/data.hpp"
#include "scorekit/dequant.hpp"
#include "scorekit/objectives.hpp"
#include "scorekit/score_model.hpp"
#include "scorekit/sde.hpp"

namespace scorekit {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamState {
 public:
  explicit AdamState(Eigen::Index n)
      : m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)) {}

  void step(const AdamConfig& config, const Eigen::VectorXd& grad,
            Eigen::VectorXd* params);
  int steps_taken() const { return t_; }

 private:
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  int t_ = 0;
};

struct TrainConfig {
  int steps = 2000;
  int batch_size = 128;
  AdamConfig adam;
  double grad_clip = 1.0;  // global norm; <= 0 disables
  WeightingScheme scheme = WeightingScheme::likelihood();
  TimeProposalKind proposal = TimeProposalKind::ImportanceSampled;
  bool shared_time = true;
  double init_final_scale = 0.01;
  int eval_every = 1;  // history recording cadence
  std::uint64_t seed = 0;
};

struct TrainResult {
  MlpScore model;
  std::vector<ObjectiveEstimate> history;  // recorded every eval_every steps
};

// Stochastic gradient training of the score network on denoising losses.
// Fully deterministic in (config.seed, dataset.seed): batches, times and
// kernel noise all come from counter-derived streams. A non-finite loss
// aborts with a diagnostic rather than continuing to optimize garbage.
TrainResult train_score_model(const SdeSpec& spec, const Dataset& data,
                              const MlpScoreConfig& arch,
                              const TrainConfig& config);

struct DequantTrainConfig {
  int steps = 1500;
  int batch_size = 16;
  AdamConfig adam;
  double grad_clip = 1.0;
  VarDeqConfig objective;
  std::uint64_t seed = 0;
};

struct DequantTrainResult {
  DequantFlow flow;
  std::vector<double> history;  // mean objective per step
};

// Trains the dequantization flow against a frozen score model.
DequantTrainResult train_dequant_flow(const SdeSpec& spec,
                                      const ScoreModel& frozen_model,
                                      const Dataset& discrete_data,
                                      const DequantFlowConfig& arch,
                                      const DequantTrainConfig& config);

}  // namespace scorekit
