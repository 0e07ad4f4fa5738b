#pragma once

#include <Eigen/Dense>
#include <variant>
#include <vector>

#include "scorekit/mlp.hpp"
#include "scorekit/rng.hpp"
#include "scorekit/sde.hpp"

namespace scorekit {

// Sinusoidal features of log time: [sin(2^k u), cos(2^k u)] for
// u = scale * log t. Log scaling spreads the short-time regime, where the
// score field changes fastest, across the feature range.
struct TimeEmbedding {
  int num_frequencies = 6;
  double scale = 1.0;

  Eigen::Index dim() const { return 2 * num_frequencies; }
  Eigen::VectorXd embed(double t) const;
};

// Exact score of a diagonal Gaussian data distribution pushed through the
// forward process. Doubles as a reference model in tests and as a cheap
// baseline: every quantity downstream (marginals, divergence, losses) has a
// closed form against it. `offset` adds a constant vector to the score,
// which turns the exact model into a controlled imperfect one.
struct AnalyticGaussianScore {
  Eigen::VectorXd mean0;
  Eigen::VectorXd var0;
  Eigen::VectorXd offset;  // empty means zero

  Eigen::Index dim() const { return mean0.size(); }
  void validate() const;
};

// Marginal N(mean, diag(var)) of the forward process at time t started from
// the model's Gaussian data distribution.
void analytic_marginal(const AnalyticGaussianScore& model, const SdeSpec& spec,
                       double t, Eigen::VectorXd* mean, Eigen::VectorXd* var);

struct MlpScoreConfig {
  std::vector<Eigen::Index> hidden{64, 64, 64};
  int num_frequencies = 6;
  double embed_scale = 1.0;
};

// Trainable score field. The network sees [x, time features] and its output
// is divided by the kernel std at t, so the net itself predicts the (scaled)
// noise and stays O(1) across the whole time range.
class MlpScore {
 public:
  MlpScore(Eigen::Index dim, MlpScoreConfig config = {});

  Eigen::Index dim() const { return dim_; }
  const MlpScoreConfig& config() const { return config_; }
  const Mlp& net() const { return net_; }
  const TimeEmbedding& embedding() const { return embedding_; }

  Eigen::VectorXd net_input(const Eigen::VectorXd& x, double t) const;
  void init(Rng& rng, double final_scale = 1.0) { params = net_.init_params(rng, final_scale); }

  Eigen::VectorXd params;

 private:
  Eigen::Index dim_;
  MlpScoreConfig config_;
  TimeEmbedding embedding_;
  Mlp net_;
};

using ScoreModel = std::variant<AnalyticGaussianScore, MlpScore>;

Eigen::Index model_dim(const ScoreModel& model);

Eigen::VectorXd score(const ScoreModel& model, const SdeSpec& spec,
                      const Eigen::VectorXd& x, double t);

// Directional derivative of the score field in x.
Eigen::VectorXd score_input_jvp(const ScoreModel& model, const SdeSpec& spec,
                                const Eigen::VectorXd& x, double t,
                                const Eigen::VectorXd& v);

// Pullback of the score field in x.
Eigen::VectorXd score_input_vjp(const ScoreModel& model, const SdeSpec& spec,
                                const Eigen::VectorXd& x, double t,
                                const Eigen::VectorXd& upstream);

// Trace of the score Jacobian, summed over coordinate directions.
double score_divergence_exact(const ScoreModel& model, const SdeSpec& spec,
                              const Eigen::VectorXd& x, double t);

// d(upstream . score(x, t)) / d params for the trainable variant.
Eigen::VectorXd score_param_grad(const MlpScore& model, const SdeSpec& spec,
                                 const Eigen::VectorXd& x, double t,
                                 const Eigen::VectorXd& upstream);

}  // namespace scorekit
