// Command line front end: every subcommand reads one JSON config, runs a
// library operation, and leaves its results plus a manifest in the config's
// output directory. Reruns with the same config are bit identical.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scorekit/checkpoint.hpp"
#include "scorekit/config.hpp"
#include "scorekit/data.hpp"
#include "scorekit/dequant.hpp"
#include "scorekit/errors.hpp"
#include "scorekit/likelihood.hpp"
#include "scorekit/objectives.hpp"
#include "scorekit/rng.hpp"
#include "scorekit/sde.hpp"
#include "scorekit/solvers.hpp"
#include "scorekit/stats.hpp"
#include "scorekit/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scorekit;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return text;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string scheme_name(const WeightingScheme& scheme) {
  if (scheme.blend == 0.0) return "original";
  if (scheme.blend == 1.0) return "likelihood";
  char buf[32];
  std::snprintf(buf, sizeof buf, "blend=%.6g", scheme.blend);
  return buf;
}

// Run fn(0..n-1) on a small worker pool. Work items only touch their own
// output slot and carry pre-forked generators, so the schedule cannot change
// any result.
void parallel_for(int n, const std::function<void(int)>& fn) {
  const unsigned hw = std::thread::hardware_concurrency();
  const int n_threads = std::min<int>(n, static_cast<int>(hw ? hw : 1));
  if (n_threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (int k = 0; k < n_threads; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct RunContext {
  ExperimentConfig cfg;
  std::string cfg_text;
  fs::path out;
};

RunContext open_run(const std::string& config_path) {
  RunContext ctx;
  ctx.cfg_text = read_file(config_path);
  ctx.cfg = parse_config(ctx.cfg_text);
  ctx.out = ctx.cfg.output_dir;
  std::error_code ec;
  fs::create_directories(ctx.out, ec);
  if (ec) throw IoError("cannot create output dir '" + ctx.out.string() + "'");
  return ctx;
}

void write_manifest(const RunContext& ctx, const std::string& command,
                    const json& seeds, const std::vector<std::string>& outputs) {
  json m;
  m["command"] = command;
  m["config_hash"] = config_hash_hex(ctx.cfg_text);
  m["seeds"] = seeds;
  m["versions"] = {{"scorekit", kVersion}};
  m["outputs"] = outputs;
  write_file(ctx.out / (command + "_manifest.json"), m.dump(2) + "\n");
}

double bpd_offset_for(const DataDistribution& dist) {
  if (const auto* img = std::get_if<DiscreteImageData>(&dist)) {
    return std::log2(static_cast<double>(img->levels));
  }
  return 0.0;
}

// Held-out points for the eval subcommands. Discrete data is uniformly
// dequantized here so the continuous model sees in-support inputs; the
// level offset is folded into bits_per_dim downstream.
Eigen::MatrixXd eval_points(const RunContext& ctx, int n) {
  Dataset ds = ctx.cfg.dataset;
  ds.split = Split::Test;
  Eigen::MatrixXd points = sample_batch(ds, n, /*batch_index=*/0);
  if (const auto* img = std::get_if<DiscreteImageData>(&ctx.cfg.dataset.dist)) {
    Rng base(ctx.cfg.eval.seed);
    for (int i = 0; i < points.rows(); ++i) {
      Rng r = base.fork(0x64650000u + static_cast<std::uint64_t>(i));
      points.row(i) =
          uniform_dequantize(points.row(i).transpose(), img->levels, r)
              .transpose();
    }
  }
  return points;
}

// A checkpoint written under one config must not be evaluated under another
// that describes a different field.
void check_layout(const RunContext& ctx, const ScoreModel& model) {
  const Eigen::Index want = ctx.cfg.dataset.dim();
  if (model_dim(model) != want) {
    throw ConfigError("checkpoint dimension " + std::to_string(model_dim(model)) +
                      " does not match dataset dimension " +
                      std::to_string(want));
  }
  const bool is_mlp = std::holds_alternative<MlpScore>(model);
  if (is_mlp != (ctx.cfg.model.kind == ModelKind::Mlp)) {
    throw ConfigError("checkpoint model kind differs from config model.kind");
  }
  if (is_mlp) {
    const auto& got = std::get<MlpScore>(model).config();
    const auto& cfg = ctx.cfg.model.mlp;
    if (got.hidden != cfg.hidden || got.num_frequencies != cfg.num_frequencies ||
        got.embed_scale != cfg.embed_scale) {
      throw ConfigError("checkpoint network layout differs from config model");
    }
  }
}

ScoreModel load_model_checked(const RunContext& ctx, const std::string& path) {
  ScoreModel model = load_score_model(path);
  check_layout(ctx, model);
  return model;
}

json point_json(int index, const LikelihoodResult& r) {
  return json{{"index", index},
              {"logp_nats", r.logp_nats},
              {"bits_per_dim", r.bits_per_dim},
              {"std_error", r.std_error},
              {"kind", to_string(r.kind)}};
}

json summary_json(const std::vector<LikelihoodResult>& results) {
  std::vector<double> logp, bpd;
  logp.reserve(results.size());
  bpd.reserve(results.size());
  for (const auto& r : results) {
    logp.push_back(r.logp_nats);
    bpd.push_back(r.bits_per_dim);
  }
  return json{{"n", results.size()},
              {"confidence", 0.95},
              {"mean_logp_nats", stats::mean(logp)},
              {"ci_half_width_nats", stats::mean_ci_half_width(logp, 0.95)},
              {"mean_bits_per_dim", stats::mean(bpd)},
              {"ci_half_width_bits_per_dim", stats::mean_ci_half_width(bpd, 0.95)}};
}

void emit_json(const RunContext& ctx, const std::string& filename,
               const json& doc) {
  const std::string text = doc.dump(2) + "\n";
  write_file(ctx.out / filename, text);
  std::cout << text;
}

// train: fit the score network and checkpoint it. The analytic field has
// nothing to fit, so it is checkpointed directly; that is how eval configs
// with a closed-form score get their checkpoint argument.
int cmd_train(const std::string& config_path) {
  RunContext ctx = open_run(config_path);
  const fs::path ckpt = ctx.out / "score.ckpt";
  const fs::path history_path = ctx.out / "loss_history.csv";
  std::string csv = "step,loss,scheme,proposal\n";

  json info;
  if (ctx.cfg.model.kind == ModelKind::AnalyticGaussian) {
    save_score_model(ckpt.string(), ScoreModel{ctx.cfg.model.gaussian});
    info["trained"] = false;
  } else {
    Dataset ds = ctx.cfg.dataset;
    ds.split = Split::Train;
    TrainResult result =
        train_score_model(ctx.cfg.sde, ds, ctx.cfg.model.mlp, ctx.cfg.train);
    save_score_model(ckpt.string(), ScoreModel{result.model});
    const int every = ctx.cfg.train.eval_every > 0 ? ctx.cfg.train.eval_every : 1;
    std::size_t k = 0;
    for (int step = 0; step < ctx.cfg.train.steps; ++step) {
      if (step % every != 0 && step + 1 != ctx.cfg.train.steps) continue;
      if (k >= result.history.size()) break;
      const ObjectiveEstimate& h = result.history[k++];
      csv += std::to_string(step) + "," + fmt(h.value) + "," +
             scheme_name(ctx.cfg.train.scheme) + "," + to_string(h.proposal) +
             "\n";
    }
    info["trained"] = true;
    info["steps"] = ctx.cfg.train.steps;
    if (!result.history.empty()) info["final_loss"] = result.history.back().value;
  }
  write_file(history_path, csv);
  info["checkpoint"] = ckpt.string();
  write_manifest(ctx, "train",
                 json{{"train", ctx.cfg.train.seed},
                      {"dataset", ctx.cfg.dataset.seed}},
                 {"score.ckpt", "loss_history.csv"});
  std::cout << info.dump(2) + "\n";
  return 0;
}

int cmd_sample(const std::string& config_path, const std::string& ckpt_path,
               std::string method, int n_override) {
  RunContext ctx = open_run(config_path);
  const ScoreModel model = load_model_checked(ctx, ckpt_path);
  if (method.empty()) method = ctx.cfg.sample.method;
  if (method != "sde" && method != "ode") {
    throw ConfigError("sample method must be 'sde' or 'ode', got '" + method +
                      "'");
  }
  const int n = n_override > 0 ? n_override : ctx.cfg.sample.n;
  const Eigen::Index dim = model_dim(model);

  Eigen::MatrixXd samples(n, dim);
  Rng base(ctx.cfg.sample.seed);
  parallel_for(n, [&](int i) {
    Rng r = base.fork(static_cast<std::uint64_t>(i));
    if (method == "sde") {
      samples.row(i) =
          sample_reverse_sde(model, ctx.cfg.sde, r, ctx.cfg.sample.n_steps)
              .transpose();
    } else {
      samples.row(i) = sample_ode(model, ctx.cfg.sde, r, ctx.cfg.solver).transpose();
    }
  });

  std::string csv;
  for (Eigen::Index j = 0; j < dim; ++j)
    csv += std::string(j ? "," : "") + "x" + std::to_string(j);
  csv += "\n";
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j)
      csv += std::string(j ? "," : "") + fmt(samples(i, j));
    csv += "\n";
  }
  const std::string filename = "samples_" + method + ".csv";
  write_file(ctx.out / filename, csv);

  write_manifest(ctx, "sample", json{{"sample", ctx.cfg.sample.seed}},
                 {filename});
  std::cout << json{{"file", (ctx.out / filename).string()},
                    {"method", method},
                    {"n", n}}
                   .dump(2) +
                   "\n";
  return 0;
}

int cmd_nll(const std::string& config_path, const std::string& ckpt_path,
            bool dump_trajectories) {
  RunContext ctx = open_run(config_path);
  const ScoreModel model = load_model_checked(ctx, ckpt_path);
  const Eigen::MatrixXd points = eval_points(ctx, ctx.cfg.eval.n_eval_points);
  const int n = static_cast<int>(points.rows());

  OdeLikelihoodConfig like_cfg;
  like_cfg.solver = ctx.cfg.solver;
  like_cfg.divergence = ctx.cfg.eval.bound.divergence;
  like_cfg.bpd_offset_bits = bpd_offset_for(ctx.cfg.dataset.dist);

  std::vector<LikelihoodResult> results(n);
  Rng base(ctx.cfg.eval.seed);
  parallel_for(n, [&](int i) {
    Rng r = base.fork(static_cast<std::uint64_t>(i));
    results[i] = ode_log_likelihood(model, ctx.cfg.sde, points.row(i).transpose(),
                                    like_cfg, &r);
  });

  std::vector<std::string> outputs{"nll.json"};
  if (dump_trajectories) {
    // Debug re-integration of the augmented flow with the full trajectory
    // kept, one CSV per point.
    SolverConfig traced = ctx.cfg.solver;
    traced.store_trajectory = true;
    for (int i = 0; i < n; ++i) {
      Rng r = base.fork(0x74720000u + static_cast<std::uint64_t>(i));
      const Eigen::Index dim = points.cols();
      Eigen::VectorXd y0(dim + 1);
      y0.head(dim) = points.row(i).transpose();
      y0[dim] = 0.0;
      auto field = [&](const Eigen::VectorXd& y, double t) {
        Eigen::VectorXd dy(dim + 1);
        dy.head(dim) = ode_rhs(model, ctx.cfg.sde, y.head(dim), t);
        dy[dim] = ode_rhs_divergence(model, ctx.cfg.sde, y.head(dim), t,
                                     like_cfg.divergence, &r);
        return dy;
      };
      TrajectoryRecord rec = rk45_integrate(field, y0, ctx.cfg.sde.epsilon(),
                                            ctx.cfg.sde.t_final(), traced);
      std::string csv = "t";
      for (Eigen::Index j = 0; j < dim; ++j) csv += ",x" + std::to_string(j);
      csv += ",delta_logp\n";
      for (std::size_t k = 0; k < rec.times.size(); ++k) {
        csv += fmt(rec.times[k]);
        for (Eigen::Index j = 0; j < dim + 1; ++j)
          csv += "," + fmt(rec.states[k][j]);
        csv += "\n";
      }
      const std::string name = "trajectory_" + std::to_string(i) + ".csv";
      write_file(ctx.out / name, csv);
      outputs.push_back(name);
    }
  }

  json doc;
  doc["points"] = json::array();
  for (int i = 0; i < n; ++i) doc["points"].push_back(point_json(i, results[i]));
  doc["summary"] = summary_json(results);
  write_manifest(ctx, "nll",
                 json{{"eval", ctx.cfg.eval.seed},
                      {"dataset", ctx.cfg.dataset.seed}},
                 outputs);
  emit_json(ctx, "nll.json", doc);
  return 0;
}

int cmd_bound(const std::string& config_path, const std::string& ckpt_path,
              const std::string& form, bool corrected) {
  RunContext ctx = open_run(config_path);
  if (form != "dsm" && form != "sm") {
    throw ConfigError("bound form must be 'dsm' or 'sm', got '" + form + "'");
  }
  if (corrected && form != "dsm") {
    throw ConfigError("--corrected applies only to the dsm form");
  }
  const ScoreModel model = load_model_checked(ctx, ckpt_path);
  const Eigen::MatrixXd points = eval_points(ctx, ctx.cfg.eval.n_eval_points);
  const int n = static_cast<int>(points.rows());

  BoundConfig bc = ctx.cfg.eval.bound;
  bc.bpd_offset_bits = bpd_offset_for(ctx.cfg.dataset.dist);

  std::vector<LikelihoodResult> results(n);
  Rng base(ctx.cfg.eval.seed);
  parallel_for(n, [&](int i) {
    Rng r = base.fork(static_cast<std::uint64_t>(i));
    const Eigen::VectorXd x = points.row(i).transpose();
    if (form == "sm") {
      results[i] = bound_sm(model, ctx.cfg.sde, x, bc, r);
    } else if (corrected) {
      results[i] = tweedie_corrected_bound(model, ctx.cfg.sde, x, bc,
                                           ctx.cfg.eval.n_eps_draws, r);
    } else {
      results[i] = bound_dsm(model, ctx.cfg.sde, x, bc, r);
    }
  });

  json doc;
  doc["points"] = json::array();
  for (int i = 0; i < n; ++i) doc["points"].push_back(point_json(i, results[i]));
  doc["summary"] = summary_json(results);
  const LikelihoodKind kind =
      results.empty() ? LikelihoodKind::BoundDsm : results.front().kind;
  const std::string filename = std::string(to_string(kind)) + ".json";
  write_manifest(ctx, "bound",
                 json{{"eval", ctx.cfg.eval.seed},
                      {"dataset", ctx.cfg.dataset.seed}},
                 {filename});
  emit_json(ctx, filename, doc);
  return 0;
}

int cmd_entropy(const std::string& config_path, const std::string& ckpt_path,
                const std::string& form_name) {
  RunContext ctx = open_run(config_path);
  EntropyForm form;
  if (form_name == "drift") {
    form = EntropyForm::DriftDotScore;
  } else if (form_name == "divergence") {
    form = EntropyForm::DivergenceForm;
  } else {
    throw ConfigError("entropy form must be 'drift' or 'divergence', got '" +
                      form_name + "'");
  }
  const ScoreModel model = load_model_checked(ctx, ckpt_path);
  const Eigen::MatrixXd samples = eval_points(ctx, ctx.cfg.eval.n_entropy_samples);
  Rng rng(ctx.cfg.eval.seed);
  const EntropyEstimate est = entropy_estimate(
      model, ctx.cfg.sde, samples, form, ctx.cfg.eval.entropy_nodes, rng);

  json doc{{"value_nats", est.value_nats},
           {"std_error", est.std_error},
           {"form", to_string(est.form)},
           {"n_samples", samples.rows()},
           {"n_time_nodes", ctx.cfg.eval.entropy_nodes}};
  const std::string filename = "entropy_" + form_name + ".json";
  write_manifest(ctx, "entropy",
                 json{{"eval", ctx.cfg.eval.seed},
                      {"dataset", ctx.cfg.dataset.seed}},
                 {filename});
  emit_json(ctx, filename, doc);
  return 0;
}

// bench-variance: per-step losses of the likelihood-weighted objective under
// the uniform and importance time proposals on the same batches, with the
// running variance of each series.
int cmd_bench_variance(const std::string& config_path) {
  RunContext ctx = open_run(config_path);
  const Eigen::Index dim = ctx.cfg.dataset.dim();

  ScoreModel model = [&]() -> ScoreModel {
    if (ctx.cfg.model.kind == ModelKind::AnalyticGaussian) {
      return ctx.cfg.model.gaussian;
    }
    MlpScore net(dim, ctx.cfg.model.mlp);
    Rng init = Rng(ctx.cfg.bench.seed).fork(0xbe);
    net.init(init, ctx.cfg.train.init_final_scale);
    return net;
  }();

  Dataset ds = ctx.cfg.dataset;
  ds.split = Split::Train;
  const WeightingScheme scheme = WeightingScheme::likelihood();
  const TimeProposal proposal(ctx.cfg.sde);
  Rng base(ctx.cfg.bench.seed);

  stats::RunningMoments uniform_moments, importance_moments;
  std::string csv = "step,scheme,proposal,loss,running_variance\n";
  for (int step = 0; step < ctx.cfg.bench.steps; ++step) {
    const Eigen::MatrixXd batch =
        sample_batch(ds, ctx.cfg.bench.batch_size,
                     static_cast<std::uint64_t>(step));
    Rng ru = base.fork(2 * static_cast<std::uint64_t>(step));
    Rng ri = base.fork(2 * static_cast<std::uint64_t>(step) + 1);
    const ObjectiveEstimate u =
        mc_objective_uniform(model, ctx.cfg.sde, batch, scheme, ru);
    const ObjectiveEstimate w =
        mc_objective_importance(model, ctx.cfg.sde, batch, proposal, ri);
    uniform_moments.push(u.value);
    importance_moments.push(w.value);
    const double uv = uniform_moments.count() >= 2 ? uniform_moments.variance() : 0.0;
    const double wv =
        importance_moments.count() >= 2 ? importance_moments.variance() : 0.0;
    csv += std::to_string(step) + ",likelihood,uniform," + fmt(u.value) + "," +
           fmt(uv) + "\n";
    csv += std::to_string(step) + ",likelihood,importance," + fmt(w.value) +
           "," + fmt(wv) + "\n";
  }
  write_file(ctx.out / "bench_variance.csv", csv);

  const double var_u = uniform_moments.variance();
  const double var_i = importance_moments.variance();
  write_manifest(ctx, "bench-variance",
                 json{{"bench", ctx.cfg.bench.seed},
                      {"dataset", ctx.cfg.dataset.seed}},
                 {"bench_variance.csv"});
  std::cout << json{{"file", (ctx.out / "bench_variance.csv").string()},
                    {"steps", ctx.cfg.bench.steps},
                    {"variance_uniform", var_u},
                    {"variance_importance", var_i},
                    {"variance_ratio", var_i / var_u}}
                   .dump(2) +
                   "\n";
  return 0;
}

const DiscreteImageData& require_discrete(const RunContext& ctx,
                                           const char* command) {
  const auto* img = std::get_if<DiscreteImageData>(&ctx.cfg.dataset.dist);
  if (!img) {
    throw ConfigError(std::string(command) +
                      " needs a dataset of kind 'discrete_image'");
  }
  return *img;
}

int cmd_dequant_train(const std::string& config_path,
                      const std::string& score_ckpt) {
  RunContext ctx = open_run(config_path);
  require_discrete(ctx, "dequant-train");
  const ScoreModel model = load_model_checked(ctx, score_ckpt);

  Dataset ds = ctx.cfg.dataset;
  ds.split = Split::Train;
  DequantTrainResult result = train_dequant_flow(
      ctx.cfg.sde, model, ds, ctx.cfg.dequant.flow, ctx.cfg.dequant.train);

  const fs::path ckpt = ctx.out / "dequant.ckpt";
  save_dequant_flow(ckpt.string(), result.flow);
  std::string csv = "step,loss\n";
  for (std::size_t k = 0; k < result.history.size(); ++k)
    csv += std::to_string(k) + "," + fmt(result.history[k]) + "\n";
  write_file(ctx.out / "dequant_loss_history.csv", csv);

  write_manifest(ctx, "dequant-train",
                 json{{"dequant", ctx.cfg.dequant.train.seed},
                      {"dataset", ctx.cfg.dataset.seed}},
                 {"dequant.ckpt", "dequant_loss_history.csv"});
  json info{{"checkpoint", ckpt.string()}, {"steps", ctx.cfg.dequant.train.steps}};
  if (!result.history.empty()) info["final_loss"] = result.history.back();
  std::cout << info.dump(2) + "\n";
  return 0;
}

// dequant-eval: paired comparison of the trained dequantizer against plain
// uniform noise on held-out discrete points, same generator for both arms.
int cmd_dequant_eval(const std::string& config_path,
                     const std::string& score_ckpt, std::string flow_path) {
  RunContext ctx = open_run(config_path);
  const DiscreteImageData& img = require_discrete(ctx, "dequant-eval");
  const ScoreModel model = load_model_checked(ctx, score_ckpt);
  if (flow_path.empty()) flow_path = (ctx.out / "dequant.ckpt").string();
  const DequantFlow flow = load_dequant_flow(flow_path);
  if (flow.dim() != ctx.cfg.dataset.dim() || flow.levels() != img.levels) {
    throw ConfigError("dequantizer checkpoint layout does not match the dataset");
  }

  Dataset ds = ctx.cfg.dataset;
  ds.split = Split::Test;
  const Eigen::MatrixXd points =
      sample_batch(ds, ctx.cfg.eval.n_eval_points, /*batch_index=*/0);
  const int n = static_cast<int>(points.rows());
  const double dim = static_cast<double>(points.cols());
  const double offset_bits = std::log2(static_cast<double>(img.levels));

  std::vector<double> var_nats(n), uni_nats(n);
  Rng base(ctx.cfg.eval.seed);
  const VarDeqConfig& vc = ctx.cfg.dequant.train.objective;
  parallel_for(n, [&](int i) {
    Rng r = base.fork(static_cast<std::uint64_t>(i));
    const Eigen::VectorXd x = points.row(i).transpose();
    var_nats[i] = var_deq_objective(flow, model, ctx.cfg.sde, x, r, vc);
    uni_nats[i] = uniform_deq_objective(model, ctx.cfg.sde, x, img.levels, r, vc);
  });

  json doc;
  doc["points"] = json::array();
  std::vector<double> gains(n);
  for (int i = 0; i < n; ++i) {
    gains[i] = uni_nats[i] - var_nats[i];
    doc["points"].push_back(
        json{{"index", i},
             {"var_bound_nats", var_nats[i]},
             {"uniform_bound_nats", uni_nats[i]},
             {"var_bits_per_dim", var_nats[i] / (dim * std::log(2.0)) + offset_bits},
             {"uniform_bits_per_dim",
              uni_nats[i] / (dim * std::log(2.0)) + offset_bits}});
  }
  doc["summary"] = json{
      {"n", n},
      {"confidence", 0.95},
      {"mean_var_bound_nats", stats::mean(var_nats)},
      {"mean_uniform_bound_nats", stats::mean(uni_nats)},
      {"mean_improvement_nats", stats::mean(gains)},
      {"ci_half_width_improvement", stats::mean_ci_half_width(gains, 0.95)}};
  write_manifest(ctx, "dequant-eval",
                 json{{"eval", ctx.cfg.eval.seed},
                      {"dataset", ctx.cfg.dataset.seed}},
                 {"dequant_eval.json"});
  emit_json(ctx, "dequant_eval.json", doc);
  return 0;
}

int emit_error(int code, const char* kind, const std::string& message) {
  std::cerr << json{{"error",
                     {{"code", code}, {"kind", kind}, {"message", message}}}}
                   .dump() +
                   "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"score-based diffusion toolkit"};
  app.require_subcommand(1);

  std::string config_path, ckpt_path, flow_path, method;
  std::string bound_form = "dsm", entropy_form = "drift";
  int n_override = 0;
  bool corrected = false, dump_trajectories = false;

  auto* train = app.add_subcommand("train", "train and checkpoint a score model");
  train->add_option("config", config_path)->required();

  auto* sample = app.add_subcommand("sample", "draw model samples to CSV");
  sample->add_option("config", config_path)->required();
  sample->add_option("checkpoint", ckpt_path)->required();
  sample->add_option("--method", method, "sde or ode");
  sample->add_option("--n", n_override, "sample count override");

  auto* nll = app.add_subcommand("nll", "per-point flow log likelihood (JSON)");
  nll->add_option("config", config_path)->required();
  nll->add_option("checkpoint", ckpt_path)->required();
  nll->add_flag("--dump-trajectories", dump_trajectories,
                "debug CSV of each solve");

  auto* bound = app.add_subcommand("bound", "per-point likelihood bounds (JSON)");
  bound->add_option("config", config_path)->required();
  bound->add_option("checkpoint", ckpt_path)->required();
  bound->add_option("--form", bound_form, "dsm or sm");
  bound->add_flag("--corrected", corrected, "short-time corrected dsm bound");

  auto* entropy = app.add_subcommand("entropy", "data entropy estimate (JSON)");
  entropy->add_option("config", config_path)->required();
  entropy->add_option("checkpoint", ckpt_path)->required();
  entropy->add_option("--form", entropy_form, "drift or divergence");

  auto* bench = app.add_subcommand("bench-variance",
                                   "uniform vs importance loss variance (CSV)");
  bench->add_option("config", config_path)->required();

  auto* dq_train = app.add_subcommand("dequant-train",
                                      "train the dequantization flow");
  dq_train->add_option("config", config_path)->required();
  dq_train->add_option("checkpoint", ckpt_path, "frozen score model")->required();

  auto* dq_eval = app.add_subcommand("dequant-eval",
                                     "variational vs uniform dequantization");
  dq_eval->add_option("config", config_path)->required();
  dq_eval->add_option("checkpoint", ckpt_path, "frozen score model")->required();
  dq_eval->add_option("--flow", flow_path,
                      "dequantizer checkpoint (default <output_dir>/dequant.ckpt)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return emit_error(2, "config", e.what());
  }

  try {
    if (train->parsed()) return cmd_train(config_path);
    if (sample->parsed()) return cmd_sample(config_path, ckpt_path, method, n_override);
    if (nll->parsed()) return cmd_nll(config_path, ckpt_path, dump_trajectories);
    if (bound->parsed()) return cmd_bound(config_path, ckpt_path, bound_form, corrected);
    if (entropy->parsed()) return cmd_entropy(config_path, ckpt_path, entropy_form);
    if (bench->parsed()) return cmd_bench_variance(config_path);
    if (dq_train->parsed()) return cmd_dequant_train(config_path, ckpt_path);
    if (dq_eval->parsed()) return cmd_dequant_eval(config_path, ckpt_path, flow_path);
  } catch (const ConfigError& e) {
    return emit_error(2, "config", e.what());
  } catch (const UnsupportedError& e) {
    return emit_error(2, "config", e.what());
  } catch (const std::invalid_argument& e) {
    return emit_error(2, "config", e.what());
  } catch (const IoError& e) {
    return emit_error(4, "io", e.what());
  } catch (const DegenerateTransitionError& e) {
    return emit_error(3, "numerical", e.what());
  } catch (const StiffnessError& e) {
    return emit_error(3, "numerical", e.what());
  } catch (const NumericalError& e) {
    return emit_error(3, "numerical", e.what());
  } catch (const std::exception& e) {
    return emit_error(1, "internal", e.what());
  }
  return 0;
}
