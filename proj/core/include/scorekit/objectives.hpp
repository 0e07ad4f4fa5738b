#pragma once

#include <Eigen/Dense>

#include "scorekit/data.hpp"
#include "scorekit/rng.hpp"
#include "scorekit/score_model.hpp"
#include "scorekit/sde.hpp"

namespace scorekit {

enum class TimeProposalKind { UniformTime, ImportanceSampled };

const char* to_string(TimeProposalKind kind);

// One stochastic evaluation of the time-integrated score matching objective.
struct ObjectiveEstimate {
  double value = 0.0;
  double t = 0.0;               // drawn time (mean of times if per-example)
  double weight_applied = 0.0;  // total factor multiplying the pair loss
  TimeProposalKind proposal = TimeProposalKind::UniformTime;
};

// Proposal density p(t) proportional to diffusion^2 / original weight on
// [epsilon, T]. Sampling inverts the closed-form CDF; no tables, no
// quadrature. For VE the ratio is constant and the proposal degenerates to
// the uniform one.
class TimeProposal {
 public:
  explicit TimeProposal(const SdeSpec& spec);

  const SdeSpec& spec() const { return spec_; }
  double normalizer() const { return normalizer_; }  // integral of the ratio
  double pdf(double t) const;
  double cdf(double t) const;
  double inverse_cdf(double u) const;
  double sample(Rng& rng) const { return inverse_cdf(rng.uniform()); }

 private:
  double antideriv(double t) const;
  double antideriv_inverse(double f) const;

  SdeSpec spec_;
  double f_lo_ = 0.0;
  double f_hi_ = 0.0;
  double normalizer_ = 0.0;
};

// Kernel draw shared by the denoising losses and by training: perturbs x0
// to time t and reports the gradient of the log kernel at the draw.
struct DsmDraw {
  double t = 0.0;
  Eigen::VectorXd x_perturbed;
  Eigen::VectorXd target;
};

DsmDraw dsm_draw(const SdeSpec& spec, const Eigen::VectorXd& x0, double t,
                 Rng& rng);

// One-sample denoising loss 1/2 lambda(t) |s(x', t) - target|^2.
double dsm_loss_at(const ScoreModel& model, const SdeSpec& spec,
                   const Eigen::VectorXd& x0, double t,
                   const WeightingScheme& scheme, Rng& rng);

// Same but without the weighting factor; the importance estimator applies
// its own total weight.
double dsm_pair_loss(const ScoreModel& model, const SdeSpec& spec,
                     const Eigen::VectorXd& x0, double t, Rng& rng);

// One-sample explicit score matching loss against the known marginal
// N(pt_mean, diag(pt_var)) at time t.
double sm_loss_at(const ScoreModel& model, const SdeSpec& spec,
                  const Eigen::VectorXd& pt_mean, const Eigen::VectorXd& pt_var,
                  double t, const WeightingScheme& scheme, Rng& rng);

struct ObjectiveOptions {
  bool shared_time = true;  // one time draw per batch vs one per example
};

// (T - epsilon) E_t E_x [dsm_loss_at], time uniform on [epsilon, T].
ObjectiveEstimate mc_objective_uniform(const ScoreModel& model,
                                       const SdeSpec& spec,
                                       const Eigen::MatrixXd& batch,
                                       const WeightingScheme& scheme, Rng& rng,
                                       const ObjectiveOptions& opts = {});

// Importance-sampled estimate of the likelihood-weighted objective:
// Z alpha_w^2(t) times the unweighted pair loss, t from the proposal.
ObjectiveEstimate mc_objective_importance(const ScoreModel& model,
                                          const SdeSpec& spec,
                                          const Eigen::MatrixXd& batch,
                                          const TimeProposal& proposal,
                                          Rng& rng,
                                          const ObjectiveOptions& opts = {});

// Closed-form inner expectations of the weighted losses at a single time,
// Gaussian data + analytic model only. Exposed for the quadrature routines
// and for the KL bound.
double dsm_node_value(const AnalyticGaussianScore& model, const SdeSpec& spec,
                      const GaussianData& data, const WeightingScheme& scheme,
                      double t);
double sm_node_value(const AnalyticGaussianScore& model, const SdeSpec& spec,
                     const GaussianData& data, const WeightingScheme& scheme,
                     double t);

// Deterministic Simpson quadrature of the weighted objective over
// [epsilon, T]. n_nodes must be odd and at least 9. Requires the analytic
// model variant; the trainable one has no closed-form inner expectation.
double quadrature_dsm(const ScoreModel& model, const SdeSpec& spec,
                      const GaussianData& data, const WeightingScheme& scheme,
                      int n_nodes = 201);
double quadrature_sm(const ScoreModel& model, const SdeSpec& spec,
                     const GaussianData& data, const WeightingScheme& scheme,
                     int n_nodes = 201);

}  // namespace scorekit
