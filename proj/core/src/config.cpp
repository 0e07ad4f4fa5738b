#include "scorekit/config.hpp"

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "scorekit/errors.hpp"

namespace scorekit {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) known = known || item.key() == key;
    if (!known) fail(where, "unknown key '" + item.key() + "'");
  }
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double get_double(const json& obj, const std::string& where, const char* key,
                  double fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) fail(where, std::string("'") + key + "' must be a number");
  return v->get<double>();
}

int get_int(const json& obj, const std::string& where, const char* key,
            int fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer())
    fail(where, std::string("'") + key + "' must be an integer");
  return v->get<int>();
}

std::uint64_t get_seed(const json& obj, const std::string& where,
                       const char* key, std::uint64_t fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer() ||
      (!v->is_number_unsigned() && v->get<std::int64_t>() < 0))
    fail(where, std::string("'") + key + "' must be a nonnegative integer");
  return v->get<std::uint64_t>();
}

bool get_bool(const json& obj, const std::string& where, const char* key,
              bool fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean())
    fail(where, std::string("'") + key + "' must be a boolean");
  return v->get<bool>();
}

std::string get_string(const json& obj, const std::string& where,
                       const char* key, const std::string& fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_string()) fail(where, std::string("'") + key + "' must be a string");
  return v->get<std::string>();
}

Eigen::VectorXd as_vector(const json& v, const std::string& where,
                          const char* key, Eigen::Index broadcast_dim) {
  if (v.is_number()) {
    if (broadcast_dim <= 0)
      fail(where, std::string("'") + key +
                      "' needs an explicit array (no dimension to broadcast to)");
    return Eigen::VectorXd::Constant(broadcast_dim, v.get<double>());
  }
  if (!v.is_array())
    fail(where, std::string("'") + key + "' must be a number or an array");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (const json& elem : v) {
    if (!elem.is_number())
      fail(where, std::string("'") + key + "' must contain numbers only");
    out[i++] = elem.get<double>();
  }
  return out;
}

std::vector<Eigen::Index> get_index_list(const json& obj,
                                         const std::string& where,
                                         const char* key,
                                         std::vector<Eigen::Index> fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_array())
    fail(where, std::string("'") + key + "' must be an array of integers");
  std::vector<Eigen::Index> out;
  for (const json& elem : *v) {
    if (!elem.is_number_integer() || elem.get<std::int64_t>() <= 0)
      fail(where, std::string("'") + key + "' must contain positive integers");
    out.push_back(elem.get<Eigen::Index>());
  }
  return out;
}

void forbid(const json& obj, const std::string& where, const char* key,
            const std::string& kind) {
  if (obj.contains(key))
    fail(where, std::string("key '") + key + "' does not apply to kind '" +
                    kind + "'");
}

SdeSpec parse_sde(const json& j) {
  const std::string where = "sde";
  check_keys(j, where,
             {"kind", "beta_min", "beta_max", "sigma_min", "sigma_max", "T",
              "epsilon"});
  const std::string kind = get_string(j, where, "kind", "vp");
  try {
    if (kind == "vp" || kind == "subvp") {
      forbid(j, where, "sigma_min", kind);
      forbid(j, where, "sigma_max", kind);
      const double beta_min = get_double(j, where, "beta_min", 0.1);
      const double beta_max = get_double(j, where, "beta_max", 20.0);
      const double t_final = get_double(j, where, "T", 1.0);
      const double epsilon =
          get_double(j, where, "epsilon", kind == "vp" ? 1e-5 : 1e-2);
      return kind == "vp" ? SdeSpec::vp(beta_min, beta_max, t_final, epsilon)
                          : SdeSpec::subvp(beta_min, beta_max, t_final, epsilon);
    }
    if (kind == "ve") {
      forbid(j, where, "beta_min", kind);
      forbid(j, where, "beta_max", kind);
      const double sigma_min = get_double(j, where, "sigma_min", 0.01);
      const double sigma_max = get_double(j, where, "sigma_max", 50.0);
      const double t_final = get_double(j, where, "T", 1.0);
      const double epsilon = get_double(j, where, "epsilon", 1e-5);
      return SdeSpec::ve(sigma_min, sigma_max, t_final, epsilon);
    }
  } catch (const std::invalid_argument& e) {
    fail(where, e.what());
  }
  fail(where, "unknown kind '" + kind + "'");
}

DataDistribution parse_dataset_dist(const json& j) {
  const std::string where = "dataset";
  const std::string kind = get_string(j, where, "kind", "gaussian");
  try {
    if (kind == "gaussian") {
      check_keys(j, where, {"kind", "seed", "dim", "mean", "var"});
      const auto dim = static_cast<Eigen::Index>(get_int(j, where, "dim", 2));
      GaussianData d;
      d.mean = j.contains("mean") ? as_vector(j.at("mean"), where, "mean", dim)
                                  : Eigen::VectorXd::Zero(dim);
      d.var = j.contains("var") ? as_vector(j.at("var"), where, "var", dim)
                                : Eigen::VectorXd::Ones(dim);
      if (j.contains("dim") && (d.mean.size() != dim || d.var.size() != dim))
        fail(where, "'mean'/'var' length disagrees with 'dim'");
      d.validate();
      return d;
    }
    if (kind == "two_modes") {
      check_keys(j, where, {"kind", "seed", "dim"});
      const auto dim = static_cast<Eigen::Index>(get_int(j, where, "dim", 2));
      GaussianMixtureData d = GaussianMixtureData::two_modes(dim);
      d.validate();
      return d;
    }
    if (kind == "mixture") {
      check_keys(j, where, {"kind", "seed", "weights", "means", "vars"});
      GaussianMixtureData d;
      const json* weights = find(j, "weights");
      const json* means = find(j, "means");
      const json* vars = find(j, "vars");
      if (!weights || !means || !vars)
        fail(where, "mixture needs 'weights', 'means' and 'vars'");
      if (!weights->is_array() || !means->is_array() || !vars->is_array())
        fail(where, "'weights', 'means' and 'vars' must be arrays");
      for (const json& w : *weights) {
        if (!w.is_number()) fail(where, "'weights' must contain numbers");
        d.weights.push_back(w.get<double>());
      }
      for (const json& m : *means)
        d.means.push_back(as_vector(m, where, "means", 0));
      for (const json& v : *vars)
        d.vars.push_back(as_vector(v, where, "vars", 0));
      d.validate();
      return d;
    }
    if (kind == "discrete_image") {
      check_keys(j, where, {"kind", "seed", "side", "levels"});
      DiscreteImageData d;
      d.side = get_int(j, where, "side", 4);
      d.levels = get_int(j, where, "levels", 8);
      d.validate();
      return d;
    }
  } catch (const std::invalid_argument& e) {
    fail(where, e.what());
  }
  fail(where, "unknown kind '" + kind + "'");
}

ModelSection parse_model(const json& j, Eigen::Index dim) {
  const std::string where = "model";
  ModelSection m;
  const std::string kind = get_string(j, where, "kind", "mlp");
  try {
    if (kind == "mlp") {
      check_keys(j, where, {"kind", "hidden", "num_frequencies", "embed_scale"});
      m.kind = ModelKind::Mlp;
      m.mlp.hidden = get_index_list(j, where, "hidden", m.mlp.hidden);
      m.mlp.num_frequencies =
          get_int(j, where, "num_frequencies", m.mlp.num_frequencies);
      m.mlp.embed_scale = get_double(j, where, "embed_scale", m.mlp.embed_scale);
      return m;
    }
    if (kind == "analytic_gaussian") {
      check_keys(j, where, {"kind", "mean", "var", "offset"});
      m.kind = ModelKind::AnalyticGaussian;
      m.gaussian.mean0 = j.contains("mean")
                             ? as_vector(j.at("mean"), where, "mean", dim)
                             : Eigen::VectorXd::Zero(dim);
      m.gaussian.var0 = j.contains("var")
                            ? as_vector(j.at("var"), where, "var", dim)
                            : Eigen::VectorXd::Ones(dim);
      if (j.contains("offset"))
        m.gaussian.offset = as_vector(j.at("offset"), where, "offset", dim);
      m.gaussian.validate();
      if (m.gaussian.dim() != dim)
        fail(where, "analytic model dimension " +
                        std::to_string(m.gaussian.dim()) +
                        " does not match the dataset dimension " +
                        std::to_string(dim));
      return m;
    }
  } catch (const std::invalid_argument& e) {
    fail(where, e.what());
  }
  fail(where, "unknown kind '" + kind + "'");
}

void parse_adam(const json& j, const std::string& where, AdamConfig* adam) {
  adam->lr = get_double(j, where, "learning_rate", adam->lr);
  adam->beta1 = get_double(j, where, "beta1", adam->beta1);
  adam->beta2 = get_double(j, where, "beta2", adam->beta2);
  adam->eps = get_double(j, where, "stabilizer", adam->eps);
}

TrainConfig parse_train(const json& j, TrainConfig cfg) {
  const std::string where = "train";
  check_keys(j, where,
             {"steps", "batch_size", "learning_rate", "beta1", "beta2",
              "stabilizer", "grad_clip", "eval_every", "seed", "weighting",
              "proposal", "shared_time", "init_final_scale"});
  cfg.steps = get_int(j, where, "steps", cfg.steps);
  cfg.batch_size = get_int(j, where, "batch_size", cfg.batch_size);
  parse_adam(j, where, &cfg.adam);
  cfg.grad_clip = get_double(j, where, "grad_clip", cfg.grad_clip);
  cfg.eval_every = get_int(j, where, "eval_every", cfg.eval_every);
  cfg.seed = get_seed(j, where, "seed", cfg.seed);
  cfg.shared_time = get_bool(j, where, "shared_time", cfg.shared_time);
  cfg.init_final_scale =
      get_double(j, where, "init_final_scale", cfg.init_final_scale);
  if (const json* w = find(j, "weighting")) {
    if (w->is_string()) {
      const auto name = w->get<std::string>();
      if (name == "original")
        cfg.scheme = WeightingScheme::original();
      else if (name == "likelihood")
        cfg.scheme = WeightingScheme::likelihood();
      else
        fail(where, "unknown weighting '" + name + "'");
    } else if (w->is_number()) {
      cfg.scheme.blend = w->get<double>();
      if (cfg.scheme.blend < 0.0 || cfg.scheme.blend > 1.0)
        fail(where, "'weighting' blend must lie in [0, 1]");
    } else {
      fail(where, "'weighting' must be a name or a blend in [0, 1]");
    }
  }
  const std::string proposal = get_string(j, where, "proposal",
                                          to_string(cfg.proposal));
  if (proposal == "uniform")
    cfg.proposal = TimeProposalKind::UniformTime;
  else if (proposal == "importance")
    cfg.proposal = TimeProposalKind::ImportanceSampled;
  else
    fail(where, "unknown proposal '" + proposal + "'");
  if (cfg.steps <= 0 || cfg.batch_size <= 0)
    fail(where, "'steps' and 'batch_size' must be positive");
  return cfg;
}

SolverConfig parse_solver(const json& j, SolverConfig cfg) {
  const std::string where = "solver";
  check_keys(j, where, {"rtol", "atol", "max_steps", "initial_step"});
  cfg.rtol = get_double(j, where, "rtol", cfg.rtol);
  cfg.atol = get_double(j, where, "atol", cfg.atol);
  cfg.max_steps = get_int(j, where, "max_steps", cfg.max_steps);
  cfg.initial_step = get_double(j, where, "initial_step", cfg.initial_step);
  if (cfg.rtol <= 0.0 || cfg.atol <= 0.0 || cfg.max_steps <= 0)
    fail(where, "tolerances and 'max_steps' must be positive");
  return cfg;
}

DivergenceConfig parse_divergence(const json& j, const std::string& where,
                                  DivergenceConfig cfg) {
  check_keys(j, where, {"exact", "n_probes", "probe"});
  cfg.exact = get_bool(j, where, "exact", cfg.exact);
  cfg.n_probes = get_int(j, where, "n_probes", cfg.n_probes);
  const std::string probe =
      get_string(j, where, "probe",
                 cfg.probe == ProbeKind::Rademacher ? "rademacher" : "gaussian");
  if (probe == "rademacher")
    cfg.probe = ProbeKind::Rademacher;
  else if (probe == "gaussian")
    cfg.probe = ProbeKind::Gaussian;
  else
    fail(where, "unknown probe '" + probe + "'");
  if (cfg.n_probes <= 0) fail(where, "'n_probes' must be positive");
  return cfg;
}

void parse_bound_keys(const json& j, const std::string& where,
                      BoundConfig* bound) {
  bound->n_time_samples =
      get_int(j, where, "n_time_samples", bound->n_time_samples);
  bound->importance_sampling =
      get_bool(j, where, "use_importance", bound->importance_sampling);
  const std::string sampling =
      get_string(j, where, "time_sampling",
                 bound->time_sampling == TimeSampling::Stratified
                     ? "stratified"
                     : "independent");
  if (sampling == "stratified")
    bound->time_sampling = TimeSampling::Stratified;
  else if (sampling == "independent")
    bound->time_sampling = TimeSampling::Independent;
  else
    fail(where, "unknown time_sampling '" + sampling + "'");
  bound->n_inner = get_int(j, where, "n_inner", bound->n_inner);
  const std::string prior =
      get_string(j, where, "prior_term",
                 bound->prior_term == PriorTermMode::ClosedForm ? "closed_form"
                                                                : "monte_carlo");
  if (prior == "closed_form")
    bound->prior_term = PriorTermMode::ClosedForm;
  else if (prior == "monte_carlo")
    bound->prior_term = PriorTermMode::MonteCarlo;
  else
    fail(where, "unknown prior_term '" + prior + "'");
  bound->n_prior_draws = get_int(j, where, "n_prior_draws", bound->n_prior_draws);
  if (const json* div = find(j, "divergence"))
    bound->divergence = parse_divergence(*div, where + ".divergence",
                                         bound->divergence);
  if (bound->n_time_samples <= 0 || bound->n_inner <= 0 ||
      bound->n_prior_draws <= 0)
    fail(where, "sample counts must be positive");
}

EvalSection parse_eval(const json& j, EvalSection cfg) {
  const std::string where = "eval";
  check_keys(j, where,
             {"n_eval_points", "n_time_samples", "use_importance",
              "time_sampling", "n_inner", "prior_term", "n_prior_draws",
              "divergence", "n_eps_draws", "entropy_nodes",
              "n_entropy_samples", "seed"});
  cfg.n_eval_points = get_int(j, where, "n_eval_points", cfg.n_eval_points);
  parse_bound_keys(j, where, &cfg.bound);
  cfg.n_eps_draws = get_int(j, where, "n_eps_draws", cfg.n_eps_draws);
  cfg.entropy_nodes = get_int(j, where, "entropy_nodes", cfg.entropy_nodes);
  cfg.n_entropy_samples =
      get_int(j, where, "n_entropy_samples", cfg.n_entropy_samples);
  cfg.seed = get_seed(j, where, "seed", cfg.seed);
  if (cfg.n_eval_points <= 0 || cfg.n_eps_draws <= 0 ||
      cfg.n_entropy_samples < 2)
    fail(where, "sample counts must be positive");
  if (cfg.entropy_nodes < 9 || cfg.entropy_nodes % 2 == 0)
    fail(where, "'entropy_nodes' must be odd and at least 9");
  return cfg;
}

DequantSection parse_dequant(const json& j, DequantSection cfg) {
  const std::string where = "dequant";
  check_keys(j, where,
             {"n_transforms", "cond_hidden", "steps", "batch_size",
              "learning_rate", "beta1", "beta2", "stabilizer", "grad_clip",
              "n_time_samples", "n_eps_draws", "seed"});
  cfg.flow.n_transforms = get_int(j, where, "n_transforms", cfg.flow.n_transforms);
  cfg.flow.cond_hidden =
      get_index_list(j, where, "cond_hidden", cfg.flow.cond_hidden);
  cfg.train.steps = get_int(j, where, "steps", cfg.train.steps);
  cfg.train.batch_size = get_int(j, where, "batch_size", cfg.train.batch_size);
  parse_adam(j, where, &cfg.train.adam);
  cfg.train.grad_clip = get_double(j, where, "grad_clip", cfg.train.grad_clip);
  cfg.train.objective.bound.n_time_samples =
      get_int(j, where, "n_time_samples",
              cfg.train.objective.bound.n_time_samples);
  cfg.train.objective.n_eps_draws =
      get_int(j, where, "n_eps_draws", cfg.train.objective.n_eps_draws);
  cfg.train.seed = get_seed(j, where, "seed", cfg.train.seed);
  if (cfg.train.steps <= 0 || cfg.train.batch_size <= 0 ||
      cfg.train.objective.bound.n_time_samples <= 0 ||
      cfg.train.objective.n_eps_draws <= 0)
    fail(where, "counts must be positive");
  return cfg;
}

SampleSection parse_sample(const json& j, SampleSection cfg) {
  const std::string where = "sample";
  check_keys(j, where, {"method", "n", "n_steps", "seed"});
  cfg.method = get_string(j, where, "method", cfg.method);
  if (cfg.method != "sde" && cfg.method != "ode")
    fail(where, "unknown method '" + cfg.method + "'");
  cfg.n = get_int(j, where, "n", cfg.n);
  cfg.n_steps = get_int(j, where, "n_steps", cfg.n_steps);
  cfg.seed = get_seed(j, where, "seed", cfg.seed);
  if (cfg.n <= 0 || cfg.n_steps <= 0) fail(where, "counts must be positive");
  return cfg;
}

BenchSection parse_bench(const json& j, BenchSection cfg) {
  const std::string where = "bench";
  check_keys(j, where, {"steps", "batch_size", "seed"});
  cfg.steps = get_int(j, where, "steps", cfg.steps);
  cfg.batch_size = get_int(j, where, "batch_size", cfg.batch_size);
  cfg.seed = get_seed(j, where, "seed", cfg.seed);
  if (cfg.steps <= 0 || cfg.batch_size <= 0)
    fail(where, "counts must be positive");
  return cfg;
}

json parse_json_text(const std::string& json_text) {
  try {
    return json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  const json root = parse_json_text(json_text);
  if (!root.is_object()) throw ConfigError("config root must be an object");
  check_keys(root, "config",
             {"sde", "dataset", "model", "train", "solver", "eval", "dequant",
              "sample", "bench", "output_dir"});

  ExperimentConfig cfg;
  cfg.dataset.dist = GaussianData{Eigen::VectorXd::Zero(2),
                                  Eigen::VectorXd::Ones(2)};
  cfg.dataset.seed = 7;

  if (const json* j = find(root, "sde")) cfg.sde = parse_sde(*j);
  if (const json* j = find(root, "dataset")) {
    cfg.dataset.dist = parse_dataset_dist(*j);
    cfg.dataset.seed = get_seed(*j, "dataset", "seed", cfg.dataset.seed);
  }
  if (const json* j = find(root, "model"))
    cfg.model = parse_model(*j, cfg.dataset.dim());
  if (const json* j = find(root, "train")) cfg.train = parse_train(*j, cfg.train);
  if (const json* j = find(root, "solver"))
    cfg.solver = parse_solver(*j, cfg.solver);
  if (const json* j = find(root, "eval")) cfg.eval = parse_eval(*j, cfg.eval);
  if (const json* j = find(root, "dequant"))
    cfg.dequant = parse_dequant(*j, cfg.dequant);
  if (const json* j = find(root, "sample"))
    cfg.sample = parse_sample(*j, cfg.sample);
  if (const json* j = find(root, "bench")) cfg.bench = parse_bench(*j, cfg.bench);
  if (const json* j = find(root, "output_dir")) {
    if (!j->is_string()) throw ConfigError("config: 'output_dir' must be a string");
    cfg.output_dir = j->get<std::string>();
  }

  if (cfg.train.proposal == TimeProposalKind::ImportanceSampled &&
      cfg.train.scheme.blend != 1.0)
    throw ConfigError(
        "train: the importance proposal is unbiased only for the likelihood "
        "weighting; set weighting to \"likelihood\" or proposal to \"uniform\"");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  if (in.bad()) throw IoError("failed reading config file: " + path);
  return parse_config(text.str());
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    hash ^= static_cast<std::uint64_t>(c);
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string config_hash_hex(const std::string& json_text) {
  const json root = parse_json_text(json_text);
  const std::uint64_t hash = fnv1a64(root.dump());
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << hash;
  return out.str();
}

}  // namespace scorekit
