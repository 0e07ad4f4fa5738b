#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "scorekit/errors.hpp"
#include "scorekit/rng.hpp"
#include "scorekit/sde.hpp"

using scorekit::Rng;
using scorekit::SdeKind;
using scorekit::SdeSpec;
using scorekit::TransitionParams;
using scorekit::WeightingScheme;

namespace {

std::vector<SdeSpec> default_specs() {
  return {SdeSpec::vp(), SdeSpec::subvp(), SdeSpec::ve()};
}

}  // namespace

TEST_SUITE("sde") {

TEST_CASE("factories validate their parameters") {
  CHECK_THROWS_AS(SdeSpec::vp(-0.1, 20.0), std::invalid_argument);
  CHECK_THROWS_AS(SdeSpec::vp(2.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(SdeSpec::vp(0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(SdeSpec::ve(0.0, 50.0), std::invalid_argument);
  CHECK_THROWS_AS(SdeSpec::ve(50.0, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(SdeSpec::vp(0.1, 20.0, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(SdeSpec::vp(0.1, 20.0, 1.0, 2.0), std::invalid_argument);
  CHECK_NOTHROW(SdeSpec::vp(1.0, 1.0));  // constant schedule is legal
}

TEST_CASE("identity transition at time zero") {
  for (const SdeSpec& spec : default_specs()) {
    const TransitionParams p = spec.transition(0.0);
    CHECK(p.alpha == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p.sigma == 0.0);
  }
}

TEST_CASE("constant schedule closed forms") {
  const SdeSpec vp = SdeSpec::vp(1.0, 1.0);
  const TransitionParams p = vp.transition(1.0);
  CHECK(p.alpha == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(p.var() == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));

  const SdeSpec sub = SdeSpec::subvp(1.0, 1.0);
  const double m = 1.0 - std::exp(-1.0);
  CHECK(sub.transition(1.0).var() == doctest::Approx(m * m).epsilon(1e-12));
}

TEST_CASE("kernel moments solve the moment ODEs") {
  // Independent check: integrate da/dt = c(t) a and dv/dt = 2 c(t) v + g^2
  // from (1, 0) with a fixed-step RK4 and compare against the closed forms.
  Rng rng(2024);
  for (const SdeSpec& spec : default_specs()) {
    for (int i = 0; i < 20; ++i) {
      const double t = rng.uniform(1e-3, spec.t_final());
      const double alpha_ode = oracles::rk4_scalar(
          [&](double u, double a) { return spec.drift_scale(u) * a; }, 1.0, 0.0,
          t, 4000);
      const double var_ode = oracles::rk4_scalar(
          [&](double u, double v) {
            return 2.0 * spec.drift_scale(u) * v + spec.diffusion_sq(u);
          },
          0.0, 0.0, t, 4000);
      const TransitionParams p = spec.transition(t);
      CHECK(p.alpha == doctest::Approx(alpha_ode).epsilon(1e-6));
      CHECK(p.var() == doctest::Approx(var_ode).epsilon(1e-6));
    }
  }
}

TEST_CASE("two time kernel solves the same ODE from s") {
  Rng rng(5);
  for (const SdeSpec& spec : default_specs()) {
    for (int i = 0; i < 10; ++i) {
      double s = rng.uniform(0.0, spec.t_final());
      double t = rng.uniform(0.0, spec.t_final());
      if (s > t) std::swap(s, t);
      t += 1e-3;  // keep a little width
      if (t > spec.t_final()) t = spec.t_final();
      const double alpha_ode = oracles::rk4_scalar(
          [&](double u, double a) { return spec.drift_scale(u) * a; }, 1.0, s,
          t, 4000);
      const double var_ode = oracles::rk4_scalar(
          [&](double u, double v) {
            return 2.0 * spec.drift_scale(u) * v + spec.diffusion_sq(u);
          },
          0.0, s, t, 4000);
      const TransitionParams p = spec.transition_between(s, t);
      CHECK(p.alpha == doctest::Approx(alpha_ode).epsilon(1e-6));
      CHECK(p.var() == doctest::Approx(var_ode).epsilon(2e-6));
    }
  }
}

TEST_CASE("semigroup composition holds to 1e-10") {
  Rng rng(77);
  for (const SdeSpec& spec : default_specs()) {
    for (int i = 0; i < 50; ++i) {
      double s = rng.uniform(0.0, spec.t_final());
      double t = rng.uniform(0.0, spec.t_final());
      if (s > t) std::swap(s, t);
      const TransitionParams full = spec.transition(t);
      const TransitionParams head = spec.transition(s);
      const TransitionParams tail = spec.transition_between(s, t);
      CHECK(full.alpha == doctest::Approx(head.alpha * tail.alpha).epsilon(1e-10));
      const double composed =
          tail.alpha * tail.alpha * head.var() + tail.var();
      CHECK(full.var() == doctest::Approx(composed).epsilon(1e-10));
    }
  }
}

TEST_CASE("beta integral and its inverse") {
  Rng rng(8);
  for (const SdeSpec spec :
       {SdeSpec::vp(), SdeSpec::vp(1.0, 1.0), SdeSpec::vp(0.0, 5.0),
        SdeSpec::subvp()}) {
    for (int i = 0; i < 20; ++i) {
      const double t = rng.uniform(0.0, spec.t_final());
      const double b = spec.beta_integral(t);
      const double quad = oracles::simpson(
          [&](double u) { return spec.beta(u); }, 0.0, t, 200);
      CHECK(b == doctest::Approx(quad).epsilon(1e-10));
      CHECK(spec.beta_integral_inverse(b) == doctest::Approx(t).epsilon(1e-12));
    }
    CHECK(spec.beta_integral_inverse(0.0) == 0.0);
  }
  CHECK_THROWS_AS(SdeSpec::ve().beta_integral(0.5), std::logic_error);
  CHECK_THROWS_AS(SdeSpec::ve().beta(0.5), std::logic_error);
  CHECK_THROWS_AS(SdeSpec::vp().beta_integral_inverse(-1.0),
                  std::invalid_argument);
}

TEST_CASE("drift is linear with matching divergence") {
  Rng rng(12);
  for (const SdeSpec& spec : default_specs()) {
    const Eigen::VectorXd x = rng.normal_vector(4);
    const double t = 0.37;
    const Eigen::VectorXd f = spec.drift(x, t);
    CHECK((f - spec.drift_scale(t) * x).norm() == 0.0);
    CHECK(spec.drift_divergence(t, 4) ==
          doctest::Approx(4.0 * spec.drift_scale(t)).epsilon(1e-15));
  }
  CHECK(SdeSpec::ve().drift_scale(0.5) == 0.0);
}

TEST_CASE("transition score is the kernel log density gradient") {
  Rng rng(31);
  for (const SdeSpec& spec : default_specs()) {
    const Eigen::VectorXd x0 = rng.normal_vector(3);
    const Eigen::VectorXd xt = rng.normal_vector(3);
    const double t = 0.63;
    const TransitionParams p = spec.transition(t);
    const Eigen::VectorXd got = spec.transition_score(x0, xt, t);
    const Eigen::VectorXd mean = p.alpha * x0;
    const Eigen::VectorXd var = Eigen::VectorXd::Constant(3, p.var());
    const Eigen::VectorXd fd = oracles::finite_diff_grad(
        [&](const Eigen::VectorXd& y) {
          return oracles::gauss_logpdf(y, mean, var);
        },
        xt, 1e-6);
    for (int i = 0; i < 3; ++i)
      CHECK(got[i] == doctest::Approx(fd[i]).epsilon(1e-5));
  }
}

TEST_CASE("transition score worked example and linearity") {
  const SdeSpec vp = SdeSpec::vp(1.0, 1.0);
  Eigen::VectorXd x0(1), xt(1);
  x0 << 0.0;
  xt << 1.0;
  const Eigen::VectorXd s = vp.transition_score(x0, xt, 1.0);
  CHECK(s[0] == doctest::Approx(-1.0 / (1.0 - std::exp(-1.0))).epsilon(1e-5));

  // Zero at the kernel mean, and linear in the displacement.
  const TransitionParams p = vp.transition(1.0);
  Eigen::VectorXd at_mean = vp.transition_score(x0, p.alpha * x0, 1.0);
  CHECK(at_mean.norm() == 0.0);
  Eigen::VectorXd twice = vp.transition_score(x0, p.alpha * x0 + 2.0 * (xt - p.alpha * x0), 1.0);
  CHECK(twice[0] == doctest::Approx(2.0 * s[0]).epsilon(1e-12));
}

TEST_CASE("degenerate kernel raises") {
  const SdeSpec vp = SdeSpec::vp();
  Eigen::VectorXd x0(1), xt(1);
  x0 << 0.5;
  xt << 0.7;
  CHECK_THROWS_AS(vp.transition_score(x0, xt, 1e-30),
                  scorekit::DegenerateTransitionError);
}

TEST_CASE("weighting endpoints and worked values") {
  const SdeSpec vp = SdeSpec::vp(1.0, 1.0);
  for (double t : {0.2, 0.5, 1.0})
    CHECK(vp.weighting(WeightingScheme::likelihood(), t) == 1.0);
  CHECK(vp.weighting(WeightingScheme::original(), 1.0) ==
        doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));

  const SdeSpec sub = SdeSpec::subvp(1.0, 1.0);
  const double m = 1.0 - std::exp(-1.0);
  CHECK(sub.weighting(WeightingScheme::original(), 1.0) ==
        doctest::Approx(m * m).epsilon(1e-12));
}

TEST_CASE("both weightings coincide exactly for VE") {
  const SdeSpec ve = SdeSpec::ve();
  for (double t : {0.01, 0.2, 0.7, 1.0}) {
    CHECK(ve.weighting(WeightingScheme::original(), t) ==
          ve.weighting(WeightingScheme::likelihood(), t));
  }
}

TEST_CASE("weighting is positive and blends geometrically") {
  Rng rng(40);
  for (int i = 0; i < 30; ++i) {
    const SdeSpec spec = i % 3 == 0   ? SdeSpec::vp(rng.uniform(0.0, 1.0),
                                                    rng.uniform(1.5, 25.0))
                         : i % 3 == 1 ? SdeSpec::subvp(rng.uniform(0.0, 1.0),
                                                       rng.uniform(1.5, 25.0))
                                      : SdeSpec::ve(rng.uniform(0.005, 0.5),
                                                    rng.uniform(1.0, 60.0));
    const double t = rng.uniform(spec.epsilon(), spec.t_final());
    const double c = rng.uniform(0.0, 1.0);
    const double w = spec.weighting(WeightingScheme{c}, t);
    CHECK(w > 0.0);
    const double lo = spec.weighting(WeightingScheme::original(), t);
    const double hi = spec.weighting(WeightingScheme::likelihood(), t);
    CHECK(w == doctest::Approx(std::pow(lo, 1.0 - c) * std::pow(hi, c))
                   .epsilon(1e-10));
  }
  CHECK_THROWS_AS(SdeSpec::vp().weighting(WeightingScheme{1.5}, 0.5),
                  std::invalid_argument);
}

TEST_CASE("prior density entropy and samples") {
  const SdeSpec vp = SdeSpec::vp();
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  CHECK(vp.prior_logpdf(zero) ==
        doctest::Approx(-1.5 * std::log(2.0 * M_PI)).epsilon(1e-12));
  Eigen::VectorXd one(1);
  one << 1.0;
  CHECK(vp.prior_logpdf(one) == doctest::Approx(-1.41894).epsilon(1e-4));

  for (const SdeSpec& spec : default_specs()) {
    const double v = spec.prior_var();
    if (spec.kind() != SdeKind::VE) CHECK(v == 1.0);
    Eigen::VectorXd x = Eigen::VectorXd::Constant(2, 0.3);
    const Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
    const Eigen::VectorXd var = Eigen::VectorXd::Constant(2, v);
    CHECK(spec.prior_logpdf(x) ==
          doctest::Approx(oracles::gauss_logpdf(x, mean, var)).epsilon(1e-12));
    CHECK(spec.prior_entropy(2) ==
          doctest::Approx(oracles::gauss_entropy(var)).epsilon(1e-12));

    Rng rng(2000 + static_cast<int>(spec.kind()));
    const int n = 100000;
    std::vector<double> first(n);
    for (int i = 0; i < n; ++i) first[i] = spec.prior_sample(2, rng)[0];
    const double se_mean = std::sqrt(v / n);
    CHECK(std::abs(oracles::naive_mean(first)) < 4.0 * se_mean);
    const double se_var = v * std::sqrt(2.0 / (n - 1.0));
    CHECK(std::abs(oracles::naive_variance(first) - v) < 4.0 * se_var);
  }

  // The VE prior variance is the accumulated kernel variance at T.
  const SdeSpec ve = SdeSpec::ve();
  CHECK(ve.prior_var() ==
        doctest::Approx(ve.transition(ve.t_final()).var()).epsilon(1e-12));
}

TEST_CASE("ve diffusion follows the geometric schedule") {
  const SdeSpec ve = SdeSpec::ve(0.01, 50.0);
  // g(t) equals the schedule value sigma_min (sigma_max/sigma_min)^t.
  for (double t : {0.0, 0.25, 1.0}) {
    const double expected = 0.01 * std::pow(50.0 / 0.01, t);
    CHECK(ve.diffusion(t) == doctest::Approx(expected).epsilon(1e-12));
  }
  // Kernel variance equals the quadrature of g^2.
  const double t = 0.8;
  const double quad = oracles::simpson(
      [&](double u) { return ve.diffusion_sq(u); }, 0.0, t, 20000);
  CHECK(ve.transition(t).var() == doctest::Approx(quad).epsilon(1e-8));
}

}  // TEST_SUITE
