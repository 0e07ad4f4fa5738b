#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "oracles.hpp"
#include "scorekit/rng.hpp"
#include "scorekit/score_model.hpp"

using scorekit::AnalyticGaussianScore;
using scorekit::MlpScore;
using scorekit::MlpScoreConfig;
using scorekit::Rng;
using scorekit::ScoreModel;
using scorekit::SdeSpec;
using scorekit::TimeEmbedding;

namespace {

AnalyticGaussianScore unit_model(int dim) {
  AnalyticGaussianScore m;
  m.mean0 = Eigen::VectorXd::Zero(dim);
  m.var0 = Eigen::VectorXd::Ones(dim);
  return m;
}

MlpScore small_mlp(int dim, std::uint64_t seed) {
  MlpScoreConfig cfg;
  cfg.hidden = {12, 10};
  cfg.num_frequencies = 4;
  MlpScore m(dim, cfg);
  Rng rng(seed);
  m.init(rng);
  return m;
}

}  // namespace

TEST_SUITE("score_model") {

TEST_CASE("time embedding shape and domain") {
  TimeEmbedding emb;
  CHECK(emb.dim() == 12);
  CHECK(emb.embed(0.5).size() == 12);
  CHECK_THROWS_AS(emb.embed(0.0), std::invalid_argument);
  // Each pair lies on the unit circle.
  const Eigen::VectorXd e = emb.embed(0.37);
  for (int k = 0; k < emb.num_frequencies; ++k) {
    const double s = e[2 * k], c = e[2 * k + 1];
    CHECK(s * s + c * c == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("analytic marginal matches the transition moments") {
  AnalyticGaussianScore m;
  m.mean0 = Eigen::VectorXd::Constant(2, 1.5);
  m.var0 = Eigen::VectorXd::Constant(2, 0.49);
  for (const SdeSpec& spec : {SdeSpec::vp(), SdeSpec::subvp(), SdeSpec::ve()}) {
    const double t = 0.31;
    Eigen::VectorXd mean, var;
    analytic_marginal(m, spec, t, &mean, &var);
    const auto p = spec.transition(t);
    CHECK(mean[0] == doctest::Approx(p.alpha * 1.5).epsilon(1e-14));
    CHECK(var[0] ==
          doctest::Approx(p.alpha * p.alpha * 0.49 + p.var()).epsilon(1e-14));
  }
}

TEST_CASE("unit gaussian under vp keeps a standard normal marginal") {
  // alpha^2 + sigma^2 = 1 for the vp kernel, so the score is -x at all times.
  const ScoreModel model = unit_model(3);
  const SdeSpec spec = SdeSpec::vp();
  Rng rng(4);
  for (double t : {1e-4, 0.1, 0.5, 1.0}) {
    const Eigen::VectorXd x = rng.normal_vector(3);
    const Eigen::VectorXd s = score(model, spec, x, t);
    CHECK((s + x).norm() < 1e-9);
  }
}

TEST_CASE("analytic score vanishes at the marginal mean") {
  AnalyticGaussianScore m;
  m.mean0 = Eigen::VectorXd::Constant(2, -0.7);
  m.var0 = Eigen::VectorXd::Constant(2, 2.0);
  const SdeSpec spec = SdeSpec::subvp();
  const double t = 0.42;
  Eigen::VectorXd mean, var;
  analytic_marginal(m, spec, t, &mean, &var);
  CHECK(score(ScoreModel(m), spec, mean, t).norm() == 0.0);
}

TEST_CASE("analytic score is the marginal log density gradient") {
  AnalyticGaussianScore m;
  m.mean0 = Eigen::VectorXd::Constant(3, 0.4);
  m.var0 = Eigen::VectorXd::Constant(3, 1.7);
  const SdeSpec spec = SdeSpec::vp();
  Rng rng(6);
  const Eigen::VectorXd x = rng.normal_vector(3);
  const double t = 0.6;
  Eigen::VectorXd mean, var;
  analytic_marginal(m, spec, t, &mean, &var);
  const Eigen::VectorXd fd = oracles::finite_diff_grad(
      [&](const Eigen::VectorXd& y) {
        return oracles::gauss_logpdf(y, mean, var);
      },
      x, 1e-6);
  const Eigen::VectorXd s = score(ScoreModel(m), spec, x, t);
  CHECK((s - fd).norm() < 1e-6);
}

TEST_CASE("constant offset shifts the analytic score") {
  AnalyticGaussianScore m = unit_model(2);
  m.offset = Eigen::VectorXd::Constant(2, 0.25);
  const SdeSpec spec = SdeSpec::vp();
  Rng rng(8);
  const Eigen::VectorXd x = rng.normal_vector(2);
  const Eigen::VectorXd with = score(ScoreModel(m), spec, x, 0.3);
  m.offset = Eigen::VectorXd();
  const Eigen::VectorXd without = score(ScoreModel(m), spec, x, 0.3);
  CHECK((with - without - Eigen::VectorXd::Constant(2, 0.25)).norm() < 1e-14);
}

TEST_CASE("analytic validation rejects bad shapes") {
  AnalyticGaussianScore m = unit_model(2);
  m.var0[1] = 0.0;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m = unit_model(2);
  m.offset = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}

TEST_CASE("mlp score jvp and vjp match finite differences") {
  const MlpScore mlp = small_mlp(3, 30);
  const ScoreModel model = mlp;
  const SdeSpec spec = SdeSpec::vp();
  Rng rng(31);
  const Eigen::VectorXd x = rng.normal_vector(3);
  const Eigen::VectorXd v = rng.normal_vector(3);
  const Eigen::VectorXd u = rng.normal_vector(3);
  const double t = 0.45;

  const Eigen::VectorXd jvp = score_input_jvp(model, spec, x, t, v);
  const Eigen::VectorXd fd = oracles::finite_diff_jvp(
      [&](const Eigen::VectorXd& y) { return score(model, spec, y, t); }, x, v,
      1e-6);
  CHECK((jvp - fd).norm() / std::max(1.0, fd.norm()) < 1e-6);

  const double a = u.dot(jvp);
  const double b = score_input_vjp(model, spec, x, t, u).dot(v);
  CHECK(a == doctest::Approx(b).epsilon(1e-10));
}

TEST_CASE("exact divergence agrees with finite differences") {
  for (const ScoreModel model :
       {ScoreModel(unit_model(3)), ScoreModel(small_mlp(3, 32))}) {
    const SdeSpec spec = SdeSpec::subvp();
    Rng rng(33);
    const Eigen::VectorXd x = rng.normal_vector(3);
    const double t = 0.52;
    double fd_div = 0.0;
    for (int i = 0; i < 3; ++i) {
      const Eigen::VectorXd e = Eigen::VectorXd::Unit(3, i);
      fd_div += oracles::finite_diff_jvp(
          [&](const Eigen::VectorXd& y) { return score(model, spec, y, t); },
          x, e, 1e-6)[i];
    }
    CHECK(score_divergence_exact(model, spec, x, t) ==
          doctest::Approx(fd_div).epsilon(1e-5));
  }
}

TEST_CASE("score parameter gradient matches finite differences") {
  MlpScore mlp = small_mlp(2, 40);
  const SdeSpec spec = SdeSpec::vp();
  Rng rng(41);
  const Eigen::VectorXd x = rng.normal_vector(2);
  const Eigen::VectorXd u = rng.normal_vector(2);
  const double t = 0.2;

  const Eigen::VectorXd grad = score_param_grad(mlp, spec, x, t, u);
  MlpScore probe = mlp;
  const Eigen::VectorXd fd = oracles::finite_diff_grad(
      [&](const Eigen::VectorXd& p) {
        probe.params = p;
        return u.dot(score(ScoreModel(probe), spec, x, t));
      },
      mlp.params, 1e-5);
  CHECK((grad - fd).norm() / std::max(1.0, fd.norm()) < 1e-6);
}

TEST_CASE("model_dim covers both variants") {
  CHECK(model_dim(ScoreModel(unit_model(4))) == 4);
  CHECK(model_dim(ScoreModel(small_mlp(2, 50))) == 2);
}

TEST_CASE("zero init head gives the zero score times kernel scaling") {
  MlpScoreConfig cfg;
  cfg.hidden = {6};
  MlpScore m(2, cfg);
  Rng rng(60);
  m.init(rng, 0.0);
  const SdeSpec spec = SdeSpec::vp();
  CHECK(score(ScoreModel(m), spec, Eigen::VectorXd::Ones(2), 0.5).norm() == 0.0);
}

}  // TEST_SUITE
