#include "scorekit/solvers.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "scorekit/errors.hpp"

namespace scorekit {

namespace {

// Dormand-Prince coefficients. b5 is the propagating 5th order row (equal to
// the last stage row, so the method is first-same-as-last), b4 the embedded
// 4th order row.
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
constexpr double kB5[7] = {35.0 / 384,    0.0,  500.0 / 1113, 125.0 / 192,
                           -2187.0 / 6784, 11.0 / 84, 0.0};
constexpr double kB4[7] = {5179.0 / 57600,    0.0,         7571.0 / 16695,
                           393.0 / 640,       -92097.0 / 339200,
                           187.0 / 2100,      1.0 / 40};

double error_norm(const Eigen::VectorXd& err, const Eigen::VectorXd& y0,
                  const Eigen::VectorXd& y1, double atol, double rtol) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double scale =
        atol + rtol * std::max(std::fabs(y0[i]), std::fabs(y1[i]));
    const double r = err[i] / scale;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(err.size()));
}

}  // namespace

TrajectoryRecord rk45_integrate(const OdeField& field,
                                const Eigen::VectorXd& y0, double t0,
                                double t1, const SolverConfig& config) {
  if (!(config.rtol > 0.0) || !(config.atol > 0.0)) {
    throw std::invalid_argument("rk45_integrate: tolerances must be positive");
  }
  if (t0 == t1) {
    throw std::invalid_argument("rk45_integrate: empty time interval");
  }
  const double dir = t1 > t0 ? 1.0 : -1.0;
  const double span = std::fabs(t1 - t0);

  TrajectoryRecord rec;
  rec.times.push_back(t0);
  rec.states.push_back(y0);

  double t = t0;
  Eigen::VectorXd y = y0;
  double h = config.initial_step > 0.0 ? dir * config.initial_step
                                       : dir * span / 100.0;

  Eigen::VectorXd k[7];
  k[0] = field(y, t);

  int attempts = 0;
  while (dir * (t1 - t) > 0.0) {
    if (attempts++ >= config.max_steps) {
      std::ostringstream msg;
      msg << "rk45_integrate: step budget (" << config.max_steps
          << ") exhausted at t=" << t << " while integrating to t=" << t1
          << "; the field appears too stiff for the requested tolerance";
      throw StiffnessError(msg.str());
    }
    // Do not step past the endpoint.
    if (dir * (t + h - t1) > 0.0) h = t1 - t;

    for (int s = 1; s < 7; ++s) {
      Eigen::VectorXd ys = y;
      for (int j = 0; j < s; ++j) {
        if (kA[s][j] != 0.0) ys += h * kA[s][j] * k[j];
      }
      k[s] = field(ys, t + kC[s] * h);
    }
    Eigen::VectorXd y_next = y;
    for (int s = 0; s < 7; ++s) {
      if (kB5[s] != 0.0) y_next += h * kB5[s] * k[s];
    }
    Eigen::VectorXd err = Eigen::VectorXd::Zero(y.size());
    for (int s = 0; s < 7; ++s) {
      const double db = kB5[s] - kB4[s];
      if (db != 0.0) err += h * db * k[s];
    }
    const double norm = error_norm(err, y, y_next, config.atol, config.rtol);
    if (!std::isfinite(norm)) {
      throw NumericalError("rk45_integrate: non-finite state during step");
    }

    // Conservative aim: steps target an error estimate well inside the
    // acceptance boundary, so the propagated fifth order solution lands a
    // couple of digits below the requested tolerance on smooth fields.
    double factor = norm == 0.0 ? 10.0 : 0.42 * std::pow(norm, -0.2);
    factor = std::min(10.0, std::max(0.2, factor));

    if (norm <= 1.0) {
      t += h;
      y = y_next;
      k[0] = k[6];  // first-same-as-last
      ++rec.n_accepted;
      rec.max_error_estimate = std::max(rec.max_error_estimate, norm);
      if (config.store_trajectory) {
        rec.times.push_back(t);
        rec.states.push_back(y);
      }
    } else {
      // k[0] still matches (y, t) after a rejection.
      ++rec.n_rejected;
    }
    h *= factor;
  }

  if (!config.store_trajectory) {
    rec.times.push_back(t);
    rec.states.push_back(y);
  }
  return rec;
}

double score_divergence(const ScoreModel& model, const SdeSpec& spec,
                        const Eigen::VectorXd& x, double t,
                        const DivergenceConfig& config, Rng* rng) {
  if (config.exact) {
    return score_divergence_exact(model, spec, x, t);
  }
  if (!rng) {
    throw std::invalid_argument("score_divergence: stochastic probes need a generator");
  }
  if (config.n_probes <= 0) {
    throw std::invalid_argument("score_divergence: n_probes must be positive");
  }
  double acc = 0.0;
  Eigen::VectorXd v(x.size());
  for (int p = 0; p < config.n_probes; ++p) {
    if (config.probe == ProbeKind::Rademacher) {
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        v[i] = rng->uniform() < 0.5 ? -1.0 : 1.0;
      }
    } else {
      v = rng->normal_vector(x.size());
    }
    acc += v.dot(score_input_jvp(model, spec, x, t, v));
  }
  return acc / static_cast<double>(config.n_probes);
}

Eigen::VectorXd ode_rhs(const ScoreModel& model, const SdeSpec& spec,
                        const Eigen::VectorXd& x, double t) {
  return spec.drift(x, t) -
         0.5 * spec.diffusion_sq(t) * score(model, spec, x, t);
}

double ode_rhs_divergence(const ScoreModel& model, const SdeSpec& spec,
                          const Eigen::VectorXd& x, double t,
                          const DivergenceConfig& config, Rng* rng) {
  return spec.drift_divergence(t, x.size()) -
         0.5 * spec.diffusion_sq(t) *
             score_divergence(model, spec, x, t, config, rng);
}

Eigen::VectorXd reverse_sde_step(const ScoreModel& model, const SdeSpec& spec,
                                 const Eigen::VectorXd& x, double t, double dt,
                                 Rng& rng) {
  if (!(dt < 0.0)) {
    throw std::invalid_argument("reverse_sde_step: dt must be negative");
  }
  const double g2 = spec.diffusion_sq(t);
  const Eigen::VectorXd drift_rev =
      spec.drift(x, t) - g2 * score(model, spec, x, t);
  return x + dt * drift_rev +
         std::sqrt(g2 * -dt) * rng.normal_vector(x.size());
}

Eigen::VectorXd sample_reverse_sde(const ScoreModel& model, const SdeSpec& spec,
                                   Rng& rng, int n_steps) {
  if (n_steps <= 0) {
    throw std::invalid_argument("sample_reverse_sde: n_steps must be positive");
  }
  const double dt =
      (spec.epsilon() - spec.t_final()) / static_cast<double>(n_steps);
  Eigen::VectorXd x = spec.prior_sample(model_dim(model), rng);
  double t = spec.t_final();
  for (int i = 0; i < n_steps; ++i) {
    x = reverse_sde_step(model, spec, x, t, dt, rng);
    t += dt;
  }
  return x;
}

Eigen::VectorXd sample_ode(const ScoreModel& model, const SdeSpec& spec,
                           Rng& rng, const SolverConfig& config) {
  const Eigen::VectorXd x_prior = spec.prior_sample(model_dim(model), rng);
  const OdeField field = [&](const Eigen::VectorXd& x, double t) {
    return ode_rhs(model, spec, x, t);
  };
  return rk45_integrate(field, x_prior, spec.t_final(), spec.epsilon(), config)
      .final_state();
}

}  // namespace scorekit
