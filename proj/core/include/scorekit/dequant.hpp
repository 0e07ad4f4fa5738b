#pragma once

#include <Eigen/Dense>
#include <vector>

#include "scorekit/likelihood.hpp"
#include "scorekit/mlp.hpp"
#include "scorekit/rng.hpp"
#include "scorekit/score_model.hpp"
#include "scorekit/sde.hpp"

namespace scorekit {

// (x + u) / levels with u uniform on [0,1)^dim. x must hold integer values
// in [0, levels).
Eigen::VectorXd uniform_dequantize(const Eigen::VectorXd& x_disc, int levels,
                                   Rng& rng);

struct DequantFlowConfig {
  int n_transforms = 3;  // between 2 and 4 keeps the toy flow cheap
  std::vector<Eigen::Index> cond_hidden{64};
};

// Conditional dequantization noise q(u | x): a logistic base variable pushed
// through n_transforms elementwise affine maps whose scales and shifts come
// from a conditioner network reading the discrete point, then squashed by a
// sigmoid into (0,1)^dim. With the conditioner head zeroed the flow is the
// identity in distribution: u is exactly uniform and log q vanishes.
class DequantFlow {
 public:
  DequantFlow(Eigen::Index dim, int levels, DequantFlowConfig config = {});

  Eigen::Index dim() const { return dim_; }
  int levels() const { return levels_; }
  const DequantFlowConfig& config() const { return config_; }
  const Mlp& conditioner() const { return conditioner_; }

  // Random hidden layers, zero head: identity at initialization.
  void init(Rng& rng) { params = conditioner_.init_params(rng, 0.0); }

  // Normalized conditioner input for a discrete point.
  Eigen::VectorXd conditioner_input(const Eigen::VectorXd& x_disc) const;

  struct Pass {
    Eigen::VectorXd u;
    double logq = 0.0;
    double logdet = 0.0;  // log |d u / d base|
    // Intermediate state kept for the backward pass.
    Eigen::VectorXd base;                 // logistic draw z_0
    std::vector<Eigen::VectorXd> stages;  // z after each affine map
    Eigen::VectorXd head_out;             // conditioner output (2 K dim)
  };

  // Deterministic push of a base draw through the flow.
  Pass forward(const Eigen::VectorXd& x_disc, const Eigen::VectorXd& base) const;

  struct Sample {
    Eigen::VectorXd u;
    double logq = 0.0;
  };
  Sample sample(const Eigen::VectorXd& x_disc, Rng& rng) const;

  struct Inverse {
    Eigen::VectorXd base;
    double logdet = 0.0;  // log |d base / d u|
  };
  Inverse inverse(const Eigen::VectorXd& x_disc, const Eigen::VectorXd& u) const;

  Eigen::VectorXd params;

 private:
  Eigen::Index dim_;
  int levels_;
  DequantFlowConfig config_;
  Mlp conditioner_;
};

struct VarDeqConfig {
  BoundConfig bound;       // time sampling of the inner likelihood bound
  int n_eps_draws = 1;     // draws for the short-time correction
};

// Stochastic objective for one discrete point: the Tweedie-corrected
// denoising upper bound on -log p((x + u)/levels) plus log q(u | x), all per
// event, so minimizing it tightens the dequantized likelihood. The score
// model is frozen: gradients flow only into the dequantizer. The generator
// is taken by value so that repeated calls with the same generator replay
// the same noise (finite differencing, paired comparisons).
double var_deq_objective(const DequantFlow& flow, const ScoreModel& model,
                         const SdeSpec& spec, const Eigen::VectorXd& x_disc,
                         Rng rng, const VarDeqConfig& config);

// Same estimand with plain uniform noise (log q = 0). Consumes the
// generator in the same pattern as the flow version, so equal generators
// give a paired comparison.
double uniform_deq_objective(const ScoreModel& model, const SdeSpec& spec,
                             const Eigen::VectorXd& x_disc, int levels,
                             Rng rng, const VarDeqConfig& config);

// Exact gradient of var_deq_objective with respect to the flow parameters,
// for the same noise event the value call with an equal generator sees.
Eigen::VectorXd var_deq_objective_grad(const DequantFlow& flow,
                                       const ScoreModel& model,
                                       const SdeSpec& spec,
                                       const Eigen::VectorXd& x_disc, Rng rng,
                                       const VarDeqConfig& config,
                                       double* value_out = nullptr);

}  // namespace scorekit
