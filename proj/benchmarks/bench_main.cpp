#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "scorekit/likelihood.hpp"
#include "scorekit/objectives.hpp"
#include "scorekit/rng.hpp"
#include "scorekit/score_model.hpp"
#include "scorekit/sde.hpp"
#include "scorekit/solvers.hpp"

namespace {

using namespace scorekit;

MlpScore make_net(Eigen::Index dim) {
  MlpScoreConfig cfg;
  cfg.hidden = {64, 64};
  MlpScore net(dim, cfg);
  Rng rng(17);
  net.init(rng);
  return net;
}

void BM_TransitionParams(benchmark::State& state) {
  const SdeSpec spec = SdeSpec::subvp();
  double t = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(spec.transition(t));
    t = t < 0.9 ? t + 1e-6 : 0.1;
  }
}
BENCHMARK(BM_TransitionParams);

void BM_MlpScoreEval(benchmark::State& state) {
  const Eigen::Index dim = state.range(0);
  const MlpScore net = make_net(dim);
  const SdeSpec spec = SdeSpec::vp();
  Rng rng(3);
  const Eigen::VectorXd x = rng.normal_vector(dim);
  for (auto _ : state) {
    benchmark::DoNotOptimize(score(net, spec, x, 0.5));
  }
}
BENCHMARK(BM_MlpScoreEval)->Arg(2)->Arg(16)->Arg(64);

void BM_MlpScoreJvp(benchmark::State& state) {
  const Eigen::Index dim = state.range(0);
  const MlpScore net = make_net(dim);
  const SdeSpec spec = SdeSpec::vp();
  Rng rng(3);
  const Eigen::VectorXd x = rng.normal_vector(dim);
  const Eigen::VectorXd v = rng.normal_vector(dim);
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_input_jvp(net, spec, x, 0.5, v));
  }
}
BENCHMARK(BM_MlpScoreJvp)->Arg(2)->Arg(16);

void BM_DsmPairLoss(benchmark::State& state) {
  const MlpScore net = make_net(4);
  const SdeSpec spec = SdeSpec::vp();
  Rng rng(5);
  const Eigen::VectorXd x0 = rng.normal_vector(4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dsm_pair_loss(net, spec, x0, 0.4, rng));
  }
}
BENCHMARK(BM_DsmPairLoss);

void BM_OdeLikelihood(benchmark::State& state) {
  const SdeSpec spec = SdeSpec::vp();
  AnalyticGaussianScore model;
  model.mean0 = Eigen::VectorXd::Zero(2);
  model.var0 = Eigen::VectorXd::Ones(2);
  Rng rng(7);
  const Eigen::VectorXd x = rng.normal_vector(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ode_log_likelihood(model, spec, x));
  }
}
BENCHMARK(BM_OdeLikelihood);

void BM_BoundDsm(benchmark::State& state) {
  const SdeSpec spec = SdeSpec::vp();
  AnalyticGaussianScore model;
  model.mean0 = Eigen::VectorXd::Zero(2);
  model.var0 = Eigen::VectorXd::Ones(2);
  BoundConfig cfg;
  cfg.n_time_samples = static_cast<int>(state.range(0));
  Rng rng(9);
  const Eigen::VectorXd x = rng.normal_vector(2);
  for (auto _ : state) {
    Rng r = rng.fork(1);
    benchmark::DoNotOptimize(bound_dsm(model, spec, x, cfg, r));
  }
}
BENCHMARK(BM_BoundDsm)->Arg(100)->Arg(1000);

void BM_ReverseSdeStep(benchmark::State& state) {
  const MlpScore net = make_net(8);
  const SdeSpec spec = SdeSpec::vp();
  Rng rng(11);
  const Eigen::VectorXd x = rng.normal_vector(8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(reverse_sde_step(net, spec, x, 0.5, -1e-3, rng));
  }
}
BENCHMARK(BM_ReverseSdeStep);

}  // namespace

BENCHMARK_MAIN();
