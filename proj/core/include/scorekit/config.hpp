#pragma once

#include <cstdint>
#include <string>

#include "scorekit/data.hpp"
#include "scorekit/likelihood.hpp"
#include "scorekit/score_model.hpp"
#include "scorekit/sde.hpp"
#include "scorekit/solvers.hpp"
#include "scorekit/training.hpp"

namespace scorekit {

inline constexpr const char* kVersion = "0.1.0";

// Which score field the eval subcommands run against when no checkpoint is
// given: the trainable network or the closed-form Gaussian field.
enum class ModelKind { Mlp, AnalyticGaussian };

struct ModelSection {
  ModelKind kind = ModelKind::Mlp;
  MlpScoreConfig mlp;
  AnalyticGaussianScore gaussian;  // populated only for the analytic kind
};

struct EvalSection {
  int n_eval_points = 100;
  BoundConfig bound;
  int n_eps_draws = 1;       // short-time correction draws
  int entropy_nodes = 65;    // quadrature nodes, must be odd
  int n_entropy_samples = 2000;
  std::uint64_t seed = 1;
};

struct DequantSection {
  DequantFlowConfig flow;
  DequantTrainConfig train;
};

struct SampleSection {
  std::string method = "sde";  // "sde" or "ode"
  int n = 1000;
  int n_steps = 500;  // Euler-Maruyama grid for the sde method
  std::uint64_t seed = 2;
};

struct BenchSection {
  int steps = 200;
  int batch_size = 64;
  std::uint64_t seed = 3;
};

// Everything a run needs, parsed from one JSON file. Sections and keys are
// all optional with the defaults shown in the structs; unknown keys anywhere
// are rejected by name so typos cannot silently fall back to defaults.
struct ExperimentConfig {
  SdeSpec sde = SdeSpec::vp();
  Dataset dataset;  // split is chosen per subcommand, not in the file
  ModelSection model;
  TrainConfig train;
  SolverConfig solver;
  EvalSection eval;
  DequantSection dequant;
  SampleSection sample;
  BenchSection bench;
  std::string output_dir = "out";
};

// Throws ConfigError with the offending key or section in the message.
ExperimentConfig parse_config(const std::string& json_text);

// Reads the file (IoError if that fails) and parses it.
ExperimentConfig load_config(const std::string& path);

// Hash of the parsed config with keys sorted and formatting normalized, so
// reordering or whitespace changes do not alter the manifest identity.
std::string config_hash_hex(const std::string& json_text);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace scorekit
