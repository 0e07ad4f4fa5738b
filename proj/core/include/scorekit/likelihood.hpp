#pragma once

#include <Eigen/Dense>

#include "scorekit/data.hpp"
#include "scorekit/objectives.hpp"
#include "scorekit/rng.hpp"
#include "scorekit/score_model.hpp"
#include "scorekit/sde.hpp"
#include "scorekit/solvers.hpp"

namespace scorekit {

enum class LikelihoodKind { OdeExact, BoundDsm, BoundSm, BoundDsmCorrected };

const char* to_string(LikelihoodKind kind);

struct LikelihoodResult {
  double logp_nats = 0.0;  // for bounds, a lower bound on log p
  LikelihoodKind kind = LikelihoodKind::OdeExact;
  int n_time_samples = 0;
  double std_error = 0.0;
  double bits_per_dim = 0.0;
};

// Negative log density per dimension in bits, plus an offset for data that
// was dequantized from discrete levels (log2 of the level count).
double bits_per_dim_from_logp(double logp_nats, Eigen::Index dim,
                              double offset_bits = 0.0);

struct OdeLikelihoodConfig {
  SolverConfig solver;
  DivergenceConfig divergence;
  double bpd_offset_bits = 0.0;
};

// Exact log likelihood of the probability flow: integrate the state and the
// accumulated divergence from epsilon to T and evaluate the prior there.
// The generator is only touched for stochastic divergence probes.
LikelihoodResult ode_log_likelihood(const ScoreModel& model,
                                    const SdeSpec& spec,
                                    const Eigen::VectorXd& x,
                                    const OdeLikelihoodConfig& config = {},
                                    Rng* rng = nullptr);

// Cross entropy of the kernel-smeared point against the prior,
// -E[log pi(x')] with x' ~ p_{0T}(. | x). Closed form, both Gaussian.
double prior_cross_entropy(const SdeSpec& spec, const Eigen::VectorXd& x);

enum class TimeSampling {
  Stratified,  // one uniform offset, systematic over the CDF
  Independent,
};

enum class PriorTermMode { ClosedForm, MonteCarlo };

struct BoundConfig {
  int n_time_samples = 1000;
  bool importance_sampling = true;
  TimeSampling time_sampling = TimeSampling::Stratified;
  int n_inner = 1;  // kernel draws per time for trainable models
  PriorTermMode prior_term = PriorTermMode::ClosedForm;
  int n_prior_draws = 1;
  DivergenceConfig divergence;  // for the SM form
  double bpd_offset_bits = 0.0;
};

// Upper bounds on -log p(x); the result stores their negation so that
// logp_nats is always a lower bound on log p(x). The denoising form needs
// only score evaluations; the explicit form also needs the divergence. For
// the analytic model the kernel expectation is taken in closed form, which
// removes the inner Monte Carlo noise entirely.
LikelihoodResult bound_dsm(const ScoreModel& model, const SdeSpec& spec,
                           const Eigen::VectorXd& x, const BoundConfig& config,
                           Rng& rng);
LikelihoodResult bound_sm(const ScoreModel& model, const SdeSpec& spec,
                          const Eigen::VectorXd& x, const BoundConfig& config,
                          Rng& rng);

// Denoising bound plus the short-time correction: the [0, epsilon] gap is
// replaced by the expected log ratio of the model's one-step denoising
// posterior against the kernel, evaluated with n_eps_draws draws.
LikelihoodResult tweedie_corrected_bound(const ScoreModel& model,
                                         const SdeSpec& spec,
                                         const Eigen::VectorXd& x,
                                         const BoundConfig& config,
                                         int n_eps_draws, Rng& rng);

// Quadrature bound on KL(data || model): likelihood-weighted explicit score
// matching objective plus the terminal Gaussian KL. Analytic model and
// Gaussian data only.
double kl_upper_bound(const ScoreModel& model, const SdeSpec& spec,
                      const GaussianData& data, int n_nodes = 201);

enum class EntropyForm { DriftDotScore, DivergenceForm };

const char* to_string(EntropyForm form);

struct EntropyEstimate {
  double value_nats = 0.0;
  EntropyForm form = EntropyForm::DriftDotScore;
  double std_error = 0.0;
};

// Data entropy through the score field: terminal entropy plus the time
// integral of either 2 f . s - g^2 |s|^2 (drift form) or
// -(2 div f + g^2 |s|^2) (divergence form), halved. Samples are rows;
// each is pushed through the kernel at every quadrature node.
EntropyEstimate entropy_estimate(const ScoreModel& model, const SdeSpec& spec,
                                 const Eigen::MatrixXd& samples,
                                 EntropyForm form, int n_time_nodes, Rng& rng);

}  // namespace scorekit
