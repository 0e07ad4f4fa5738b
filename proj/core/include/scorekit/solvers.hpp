#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "scorekit/rng.hpp"
#include "scorekit/score_model.hpp"
#include "scorekit/sde.hpp"

namespace scorekit {

struct SolverConfig {
  double rtol = 1e-5;
  double atol = 1e-5;
  int max_steps = 100000;
  double initial_step = 0.0;  // 0 picks a heuristic
  bool store_trajectory = false;
};

struct TrajectoryRecord {
  // First and last point always present; all accepted points when the
  // config asks for the full trajectory.
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  int n_accepted = 0;
  int n_rejected = 0;
  double max_error_estimate = 0.0;

  const Eigen::VectorXd& final_state() const { return states.back(); }
};

using OdeField = std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>;

// Embedded Dormand-Prince 4(5) with a mixed absolute/relative error norm.
// Integrates from t0 to t1 in either direction. Raises StiffnessError when
// max_steps step attempts do not reach t1.
TrajectoryRecord rk45_integrate(const OdeField& field,
                                const Eigen::VectorXd& y0, double t0, double t1,
                                const SolverConfig& config = {});

enum class ProbeKind { Rademacher, Gaussian };

struct DivergenceConfig {
  bool exact = true;
  int n_probes = 16;
  ProbeKind probe = ProbeKind::Rademacher;

  // Exact coordinate sweep up to this dimension, Hutchinson above it.
  static DivergenceConfig auto_for(Eigen::Index dim) {
    DivergenceConfig c;
    c.exact = dim <= 16;
    return c;
  }
};

// Trace of the score Jacobian under the chosen estimator. The stochastic
// path needs the generator; the exact path ignores it.
double score_divergence(const ScoreModel& model, const SdeSpec& spec,
                        const Eigen::VectorXd& x, double t,
                        const DivergenceConfig& config, Rng* rng);

// Probability flow field f(x, t) - 1/2 g^2(t) score(x, t) and its
// divergence, the two ingredients of the exact likelihood.
Eigen::VectorXd ode_rhs(const ScoreModel& model, const SdeSpec& spec,
                        const Eigen::VectorXd& x, double t);
double ode_rhs_divergence(const ScoreModel& model, const SdeSpec& spec,
                          const Eigen::VectorXd& x, double t,
                          const DivergenceConfig& config, Rng* rng);

// One explicit reverse-time step of the model SDE
//   dx = [f - g^2 score] dt + g dw,   dt < 0.
Eigen::VectorXd reverse_sde_step(const ScoreModel& model, const SdeSpec& spec,
                                 const Eigen::VectorXd& x, double t, double dt,
                                 Rng& rng);

// Euler-Maruyama from the prior at T down to epsilon on a uniform grid.
Eigen::VectorXd sample_reverse_sde(const ScoreModel& model, const SdeSpec& spec,
                                   Rng& rng, int n_steps = 1000);

// Probability flow sample: prior draw at T integrated back to epsilon.
Eigen::VectorXd sample_ode(const ScoreModel& model, const SdeSpec& spec,
                           Rng& rng, const SolverConfig& config = {});

}  // namespace scorekit
