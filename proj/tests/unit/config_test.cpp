#include <doctest.h>

#include <string>
#include <variant>

#include "scorekit/config.hpp"
#include "scorekit/errors.hpp"

using scorekit::ConfigError;
using scorekit::ExperimentConfig;
using scorekit::GaussianData;
using scorekit::GaussianMixtureData;
using scorekit::ModelKind;
using scorekit::SdeKind;
using scorekit::parse_config;

TEST_SUITE("config") {

TEST_CASE("empty object gives the documented defaults") {
  const ExperimentConfig cfg = parse_config("{}");
  CHECK(cfg.sde.kind() == SdeKind::VP);
  CHECK(cfg.sde.epsilon() == 1e-5);
  CHECK(cfg.dataset.dim() == 2);
  CHECK(cfg.model.kind == ModelKind::Mlp);
  CHECK(cfg.train.steps == 2000);
  CHECK(cfg.eval.bound.n_time_samples == 1000);
  CHECK(cfg.output_dir == "out");
}

TEST_CASE("full round of overrides") {
  const std::string text = R"json({
    "sde": {"kind": "subvp", "beta_min": 0.2, "beta_max": 18.0, "T": 2.0,
            "epsilon": 0.02},
    "dataset": {"kind": "mixture",
                "weights": [0.25, 0.75],
                "means": [[-1.0, 0.0], [1.5, 0.5]],
                "vars": [[0.5, 0.5], [1.0, 2.0]],
                "seed": 99},
    "model": {"kind": "mlp", "hidden": [32, 32], "num_frequencies": 4,
              "embed_scale": 2.0},
    "train": {"steps": 50, "batch_size": 8, "learning_rate": 0.01,
              "weighting": "original", "proposal": "uniform",
              "eval_every": 5, "seed": 1},
    "solver": {"rtol": 1e-6, "atol": 1e-7, "max_steps": 5000},
    "eval": {"n_eval_points": 10, "n_time_samples": 250,
             "use_importance": false, "time_sampling": "independent",
             "prior_term": "monte_carlo", "n_prior_draws": 3,
             "divergence": {"exact": false, "n_probes": 8, "probe": "gaussian"},
             "entropy_nodes": 33, "seed": 2},
    "dequant": {"n_transforms": 2, "cond_hidden": [16], "steps": 20,
                "n_time_samples": 6},
    "sample": {"method": "ode", "n": 64, "seed": 3},
    "bench": {"steps": 11, "batch_size": 4},
    "output_dir": "results"
  })json";
  const ExperimentConfig cfg = parse_config(text);
  CHECK(cfg.sde.kind() == SdeKind::SubVP);
  CHECK(cfg.sde.beta_max() == 18.0);
  CHECK(cfg.sde.t_final() == 2.0);
  const auto& mix = std::get<GaussianMixtureData>(cfg.dataset.dist);
  CHECK(mix.weights[1] == 0.75);
  CHECK(cfg.dataset.seed == 99);
  CHECK(cfg.model.mlp.hidden == std::vector<Eigen::Index>{32, 32});
  CHECK(cfg.train.scheme.blend == 0.0);
  CHECK(cfg.train.proposal == scorekit::TimeProposalKind::UniformTime);
  CHECK(cfg.train.adam.lr == 0.01);
  CHECK(cfg.train.eval_every == 5);
  CHECK(cfg.solver.atol == 1e-7);
  CHECK(cfg.eval.n_eval_points == 10);
  CHECK_FALSE(cfg.eval.bound.importance_sampling);
  CHECK(cfg.eval.bound.time_sampling == scorekit::TimeSampling::Independent);
  CHECK(cfg.eval.bound.prior_term == scorekit::PriorTermMode::MonteCarlo);
  CHECK_FALSE(cfg.eval.bound.divergence.exact);
  CHECK(cfg.eval.bound.divergence.probe == scorekit::ProbeKind::Gaussian);
  CHECK(cfg.eval.entropy_nodes == 33);
  CHECK(cfg.dequant.flow.n_transforms == 2);
  CHECK(cfg.dequant.train.objective.bound.n_time_samples == 6);
  CHECK(cfg.sample.method == "ode");
  CHECK(cfg.bench.steps == 11);
  CHECK(cfg.output_dir == "results");
}

TEST_CASE("unknown keys are rejected by name at every level") {
  CHECK_THROWS_WITH_AS(parse_config(R"({"sdee": {}})"),
                       doctest::Contains("sdee"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"sde": {"beta_mni": 1.0}})"),
                       doctest::Contains("beta_mni"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"train": {"lr": 0.1}})"),
                       doctest::Contains("lr"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"eval": {"divergence": {"probes": 2}}})"),
      doctest::Contains("probes"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"dataset": {"kind": "gaussian",
                                                    "levels": 4}})"),
                       doctest::Contains("levels"), ConfigError);
}

TEST_CASE("keys from the wrong sde family are rejected") {
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"sde": {"kind": "vp", "sigma_min": 0.1}})"),
      doctest::Contains("sigma_min"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"sde": {"kind": "ve", "beta_max": 5.0}})"),
      doctest::Contains("beta_max"), ConfigError);
}

TEST_CASE("invalid json and wrong types") {
  CHECK_THROWS_AS(parse_config("{nope"), ConfigError);
  CHECK_THROWS_AS(parse_config("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"train": {"steps": "many"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"train": {"steps": -5}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"train": {"seed": -1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"output_dir": 3}})"), ConfigError);
}

TEST_CASE("scalar broadcast in dataset vectors") {
  const ExperimentConfig cfg = parse_config(
      R"({"dataset": {"kind": "gaussian", "dim": 3, "mean": 0.5, "var": 2.0}})");
  const auto& g = std::get<GaussianData>(cfg.dataset.dist);
  CHECK(g.mean.size() == 3);
  CHECK(g.mean[2] == 0.5);
  CHECK(g.var[0] == 2.0);
}

TEST_CASE("analytic model must match the dataset dimension") {
  CHECK_NOTHROW(parse_config(
      R"({"dataset": {"kind": "gaussian", "dim": 2},
          "model": {"kind": "analytic_gaussian", "mean": 0.0, "var": 1.0}})"));
  CHECK_THROWS_AS(parse_config(
      R"({"dataset": {"kind": "gaussian", "dim": 2},
          "model": {"kind": "analytic_gaussian", "mean": [0.0, 0.0, 0.0],
                    "var": 1.0}})"),
      ConfigError);
}

TEST_CASE("weighting accepts names and blends") {
  CHECK(parse_config(R"({"train": {"weighting": "likelihood"}})")
            .train.scheme.blend == 1.0);
  CHECK(parse_config(R"({"train": {"weighting": 0.5, "proposal": "uniform"}})")
            .train.scheme.blend == 0.5);
  CHECK_THROWS_AS(parse_config(R"({"train": {"weighting": 1.5}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"train": {"weighting": "both"}})"),
                  ConfigError);
  // Importance proposal with a non-likelihood weighting cannot be estimated
  // unbiasedly; the config layer rejects the combination outright.
  CHECK_THROWS_AS(parse_config(R"({"train": {"weighting": 0.5}})"), ConfigError);
}

TEST_CASE("two modes dataset shortcut") {
  const ExperimentConfig cfg =
      parse_config(R"({"dataset": {"kind": "two_modes", "dim": 3}})");
  const auto& mix = std::get<GaussianMixtureData>(cfg.dataset.dist);
  CHECK(mix.dim() == 3);
  CHECK(mix.weights.size() == 2);
}

TEST_CASE("config hash is canonical") {
  const std::string a = R"({"train": {"steps": 7}, "output_dir": "x"})";
  const std::string b = R"({
    "output_dir": "x",
    "train": {"steps": 7}
  })";
  const std::string c = R"({"train": {"steps": 8}, "output_dir": "x"})";
  CHECK(scorekit::config_hash_hex(a) == scorekit::config_hash_hex(b));
  CHECK(scorekit::config_hash_hex(a) != scorekit::config_hash_hex(c));
  CHECK(scorekit::config_hash_hex(a).size() == 16);
}

TEST_CASE("load_config distinguishes io from parse failures") {
  CHECK_THROWS_AS(scorekit::load_config("/nonexistent/cfg.json"),
                  scorekit::IoError);
}

}  // TEST_SUITE
