#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "scorekit/data.hpp"
#include "scorekit/errors.hpp"
#include "scorekit/likelihood.hpp"
#include "scorekit/rng.hpp"
#include "scorekit/score_model.hpp"
#include "scorekit/stats.hpp"

using scorekit::AnalyticGaussianScore;
using scorekit::BoundConfig;
using scorekit::EntropyForm;
using scorekit::GaussianData;
using scorekit::LikelihoodKind;
using scorekit::MlpScore;
using scorekit::MlpScoreConfig;
using scorekit::PriorTermMode;
using scorekit::Rng;
using scorekit::ScoreModel;
using scorekit::SdeSpec;
using scorekit::TimeSampling;

namespace {

GaussianData gdata(int dim, double mean, double var) {
  GaussianData d;
  d.mean = Eigen::VectorXd::Constant(dim, mean);
  d.var = Eigen::VectorXd::Constant(dim, var);
  return d;
}

AnalyticGaussianScore amodel(const GaussianData& d) {
  AnalyticGaussianScore m;
  m.mean0 = d.mean;
  m.var0 = d.var;
  return m;
}

double true_gauss_logpdf(const GaussianData& d, const Eigen::VectorXd& x) {
  return oracles::gauss_logpdf(x, d.mean, d.var);
}

// Density of the continuous flow model itself (prior pulled back through the
// probability flow). With the exact score the flow map is affine in each
// dimension: it carries the marginal at epsilon onto the marginal at the
// final time, so scale and shift follow from the two marginals and the log
// determinant is the sum of log scales. The model density differs from the
// data density by the prior mismatch at the final time, which never vanishes
// exactly; this closed form is what the solver should reproduce tightly.
double exact_flow_logp(const GaussianData& d, const SdeSpec& spec,
                       const Eigen::VectorXd& x) {
  const auto lo = spec.transition(spec.epsilon());
  const auto hi = spec.transition(spec.t_final());
  const double v_prior = spec.prior_var();
  double acc = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double w_lo = lo.alpha * lo.alpha * d.var[k] + lo.var();
    const double w_hi = hi.alpha * hi.alpha * d.var[k] + hi.var();
    const double scale = std::sqrt(w_hi / w_lo);
    const double x_hi =
        hi.alpha * d.mean[k] + scale * (x[k] - lo.alpha * d.mean[k]);
    acc += -0.5 * std::log(2.0 * M_PI * v_prior) -
           0.5 * x_hi * x_hi / v_prior + std::log(scale);
  }
  return acc;
}

ScoreModel random_mlp(int dim, std::uint64_t seed) {
  MlpScoreConfig cfg;
  cfg.hidden = {16, 16};
  MlpScore m(dim, cfg);
  Rng rng(seed);
  m.init(rng, 0.05);
  return m;
}

}  // namespace

TEST_SUITE("likelihood") {

TEST_CASE("bits per dim conversion") {
  // -logp = D ln 2 means exactly one bit per dimension.
  CHECK(scorekit::bits_per_dim_from_logp(-3.0 * std::log(2.0), 3) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(scorekit::bits_per_dim_from_logp(-3.0 * std::log(2.0), 3, 2.0) ==
        doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("ode likelihood matches the flow model density in closed form") {
  for (const SdeSpec& spec : {SdeSpec::vp(), SdeSpec::subvp(), SdeSpec::ve()}) {
    const GaussianData d = gdata(2, 0.3, 1.4);
    const ScoreModel model = amodel(d);
    Rng rng(11);
    for (int i = 0; i < 3; ++i) {
      const Eigen::VectorXd x =
          d.mean + d.var.cwiseSqrt().cwiseProduct(rng.normal_vector(2));
      const auto res = scorekit::ode_log_likelihood(model, spec, x);
      CHECK(res.kind == LikelihoodKind::OdeExact);
      CHECK(std::abs(res.logp_nats - exact_flow_logp(d, spec, x)) < 1e-3);
      // Near recovery of the data density; the residual is the prior gap.
      CHECK(res.logp_nats ==
            doctest::Approx(true_gauss_logpdf(d, x)).epsilon(0.02));
    }
  }
}

TEST_CASE("prior cross entropy matches monte carlo") {
  const SdeSpec spec = SdeSpec::vp();
  Rng rng(21);
  const Eigen::VectorXd x = rng.normal_vector(2) * 2.0;
  const double closed = scorekit::prior_cross_entropy(spec, x);

  const auto p = spec.transition(spec.t_final());
  const int n = 200000;
  std::vector<double> vals;
  vals.reserve(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd xt = p.alpha * x + p.sigma * rng.normal_vector(2);
    vals.push_back(-spec.prior_logpdf(xt));
  }
  CHECK(std::abs(closed - scorekit::stats::mean(vals)) <
        4.0 * scorekit::stats::std_error(vals));
}

TEST_CASE("denoising bound lower bounds the exact gaussian log density") {
  const GaussianData d = gdata(2, 0.0, 1.0);
  const ScoreModel model = amodel(d);
  const SdeSpec spec = SdeSpec::vp();
  BoundConfig cfg;
  cfg.n_time_samples = 4000;
  Rng rng(31);
  for (int i = 0; i < 5; ++i) {
    const Eigen::VectorXd x = rng.normal_vector(2);
    const auto res = scorekit::bound_dsm(model, spec, x, cfg, rng);
    CHECK(res.kind == LikelihoodKind::BoundDsm);
    CHECK(res.n_time_samples == 4000);
    const double truth = true_gauss_logpdf(d, x);
    // A true lower bound, but tight for the exact score on this data: the
    // only gap is the [0, epsilon] truncation.
    CHECK(res.logp_nats <= truth + 3.0 * res.std_error + 1e-3);
    CHECK(res.logp_nats == doctest::Approx(truth).epsilon(0.01));
  }
}

TEST_CASE("explicit and denoising bounds agree for the analytic model") {
  const GaussianData d = gdata(2, 0.4, 0.8);
  const ScoreModel model = amodel(d);
  const SdeSpec spec = SdeSpec::subvp();
  BoundConfig cfg;
  cfg.n_time_samples = 3000;
  Rng rng(41);
  const Eigen::VectorXd x = rng.normal_vector(2);
  Rng ra(7), rb(7);
  const auto dsm = scorekit::bound_dsm(model, spec, x, cfg, ra);
  const auto sm = scorekit::bound_sm(model, spec, x, cfg, rb);
  CHECK(sm.kind == LikelihoodKind::BoundSm);
  // Same times, closed inner expectations; only the integrands differ, and
  // their expectations coincide for a score that is an exact gradient field.
  const double se = std::hypot(dsm.std_error, sm.std_error);
  CHECK(std::abs(dsm.logp_nats - sm.logp_nats) < 3.0 * se + 1e-6);
}

TEST_CASE("stratified sampling reduces the reported and actual spread") {
  const GaussianData d = gdata(2, 0.0, 1.2);
  const ScoreModel model = amodel(d);
  const SdeSpec spec = SdeSpec::vp();
  Rng rng(51);
  const Eigen::VectorXd x = rng.normal_vector(2);

  BoundConfig strat;
  strat.n_time_samples = 500;
  BoundConfig indep = strat;
  indep.time_sampling = TimeSampling::Independent;

  std::vector<double> strat_vals, indep_vals;
  for (int i = 0; i < 60; ++i) {
    strat_vals.push_back(scorekit::bound_dsm(model, spec, x, strat, rng).logp_nats);
    indep_vals.push_back(scorekit::bound_dsm(model, spec, x, indep, rng).logp_nats);
  }
  CHECK(scorekit::stats::sample_variance(strat_vals) <
        scorekit::stats::sample_variance(indep_vals));
}

TEST_CASE("reported standard error matches the spread across seeds") {
  const GaussianData d = gdata(2, 0.0, 1.0);
  const ScoreModel model = amodel(d);
  const SdeSpec spec = SdeSpec::vp();
  Rng rng(61);
  const Eigen::VectorXd x = rng.normal_vector(2);
  BoundConfig cfg;
  cfg.n_time_samples = 400;
  cfg.time_sampling = TimeSampling::Independent;

  std::vector<double> vals, reported;
  for (int i = 0; i < 200; ++i) {
    const auto res = scorekit::bound_dsm(model, spec, x, cfg, rng);
    vals.push_back(res.logp_nats);
    reported.push_back(res.std_error);
  }
  const double actual = std::sqrt(scorekit::stats::sample_variance(vals));
  const double mean_reported = scorekit::stats::mean(reported);
  // Within a factor of 1.5 is plenty for 200 repetitions.
  CHECK(mean_reported > actual / 1.5);
  CHECK(mean_reported < actual * 1.5);
}

TEST_CASE("monte carlo prior term is unbiased against the closed form") {
  const GaussianData d = gdata(2, 0.5, 1.0);
  const ScoreModel model = amodel(d);
  const SdeSpec spec = SdeSpec::vp();
  Rng rng(71);
  const Eigen::VectorXd x = rng.normal_vector(2);

  BoundConfig closed;
  closed.n_time_samples = 2000;
  BoundConfig mc = closed;
  mc.prior_term = PriorTermMode::MonteCarlo;
  mc.n_prior_draws = 64;

  std::vector<double> diffs;
  for (int i = 0; i < 60; ++i) {
    Rng shared(1000 + i);
    Rng shared2(1000 + i);
    const double a = scorekit::bound_dsm(model, spec, x, closed, shared).logp_nats;
    const double b = scorekit::bound_dsm(model, spec, x, mc, shared2).logp_nats;
    diffs.push_back(b - a);
  }
  CHECK(std::abs(scorekit::stats::mean(diffs)) <
        4.0 * scorekit::stats::std_error(diffs) + 1e-4);
}

TEST_CASE("mlp bound stays below the ode likelihood of the same model") {
  // For any score field the bound must under-report the model's own ODE
  // likelihood up to Monte Carlo error; with a random field the gap is real.
  const ScoreModel model = random_mlp(2, 81);
  const SdeSpec spec = SdeSpec::vp();
  Rng rng(82);
  BoundConfig cfg;
  cfg.n_time_samples = 3000;
  cfg.n_inner = 4;
  for (int i = 0; i < 3; ++i) {
    const Eigen::VectorXd x = rng.normal_vector(2);
    const auto exact = scorekit::ode_log_likelihood(model, spec, x);
    const auto lower = scorekit::bound_dsm(model, spec, x, cfg, rng);
    CHECK(lower.logp_nats <= exact.logp_nats + 3.0 * lower.std_error + 5e-3);
  }
}

TEST_CASE("tweedie correction tightens the bound on gaussian data") {
  const GaussianData d = gdata(2, 0.0, 1.0);
  const ScoreModel model = amodel(d);
  const SdeSpec spec = SdeSpec::vp();
  Rng rng(91);
  const Eigen::VectorXd x = rng.normal_vector(2);
  BoundConfig cfg;
  cfg.n_time_samples = 3000;

  Rng ra(5), rb(5);
  const auto plain = scorekit::bound_dsm(model, spec, x, cfg, ra);
  const auto fixed = scorekit::tweedie_corrected_bound(model, spec, x, cfg, 16, rb);
  CHECK(fixed.kind == LikelihoodKind::BoundDsmCorrected);
  // With the exact score the corrected bound matches the truth even more
  // closely than the truncated one; both sit within their error bars.
  const double truth = true_gauss_logpdf(d, x);
  CHECK(std::abs(fixed.logp_nats - truth) <
        std::abs(plain.logp_nats - truth) + 3.0 * fixed.std_error + 1e-3);
}

TEST_CASE("kl upper bound is nonnegative and zero for the true model") {
  const GaussianData d = gdata(2, 0.3, 1.1);
  const SdeSpec spec = SdeSpec::vp();
  // Exact model: the bound collapses to (nearly) zero.
  const double tight = scorekit::kl_upper_bound(ScoreModel(amodel(d)), spec, d);
  CHECK(tight >= -1e-9);
  CHECK(tight < 5e-3);

  // Wrong model: strictly positive and at least the true KL of the final
  // perturbed marginals.
  AnalyticGaussianScore wrong = amodel(d);
  wrong.offset = Eigen::VectorXd::Constant(2, 0.7);
  const double loose = scorekit::kl_upper_bound(ScoreModel(wrong), spec, d);
  CHECK(loose > 0.05);
}

TEST_CASE("entropy both forms match the gaussian closed form") {
  const GaussianData d = gdata(2, 0.0, 4.0);
  const ScoreModel model = amodel(d);
  const SdeSpec spec = SdeSpec::vp();
  const double truth = oracles::gauss_entropy(d.var);

  Rng data_rng(101);
  const int n = 600;
  Eigen::MatrixXd samples(n, 2);
  for (int i = 0; i < n; ++i)
    samples.row(i) =
        (d.mean + d.var.cwiseSqrt().cwiseProduct(data_rng.normal_vector(2)))
            .transpose();

  for (EntropyForm form :
       {EntropyForm::DriftDotScore, EntropyForm::DivergenceForm}) {
    Rng rng(102);
    const auto est = scorekit::entropy_estimate(model, spec, samples, form, 65, rng);
    CHECK(est.form == form);
    CHECK(est.value_nats == doctest::Approx(truth).epsilon(0.02));
    CHECK(std::abs(est.value_nats - truth) < 4.0 * est.std_error + 0.01);
  }
}

TEST_CASE("entropy estimator input validation") {
  const GaussianData d = gdata(2, 0.0, 1.0);
  const ScoreModel model = amodel(d);
  const SdeSpec spec = SdeSpec::vp();
  Rng rng(111);
  Eigen::MatrixXd one_row(1, 2);
  one_row.setZero();
  CHECK_THROWS_AS(scorekit::entropy_estimate(model, spec, one_row,
                                             EntropyForm::DriftDotScore, 65, rng),
                  std::invalid_argument);
  Eigen::MatrixXd ok(4, 2);
  ok.setZero();
  CHECK_THROWS_AS(scorekit::entropy_estimate(model, spec, ok,
                                             EntropyForm::DriftDotScore, 8, rng),
                  std::invalid_argument);
}

TEST_CASE("likelihood kind names") {
  CHECK(std::string(to_string(LikelihoodKind::OdeExact)) == "ode");
  CHECK(std::string(to_string(LikelihoodKind::BoundDsm)) == "bound_dsm");
  CHECK(std::string(to_string(LikelihoodKind::BoundSm)) == "bound_sm");
  CHECK(std::string(to_string(LikelihoodKind::BoundDsmCorrected)) ==
        "bound_dsm_corrected");
  CHECK(std::string(to_string(EntropyForm::DriftDotScore)) == "drift_dot_score");
  CHECK(std::string(to_string(EntropyForm::DivergenceForm)) == "divergence_form");
}

}  // TEST_SUITE
