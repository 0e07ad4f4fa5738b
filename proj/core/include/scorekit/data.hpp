#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <variant>
#include <vector>

#include "scorekit/rng.hpp"

namespace scorekit {

// Diagonal Gaussian toy distribution.
struct GaussianData {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;

  Eigen::Index dim() const { return mean.size(); }
  void validate() const;
};

struct GaussianMixtureData {
  std::vector<double> weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::VectorXd> vars;

  Eigen::Index dim() const { return means.empty() ? 0 : means.front().size(); }
  void validate() const;

  // Two symmetric unit-variance components at +/- (2, 2, ...).
  static GaussianMixtureData two_modes(Eigen::Index dim = 2);
};

// Tiny quantized images: a smooth random field on a side x side grid,
// rescaled to [0, 1) per sample and cut into `levels` buckets. Values in a
// batch are the integer bucket indices stored as doubles.
struct DiscreteImageData {
  int side = 4;
  int levels = 8;

  Eigen::Index dim() const { return static_cast<Eigen::Index>(side) * side; }
  void validate() const;
};

using DataDistribution =
    std::variant<GaussianData, GaussianMixtureData, DiscreteImageData>;

Eigen::Index data_dim(const DataDistribution& dist);

enum class Split { Train, Test };

// A seeded source of batches. Train and test use disjoint child streams of
// the seed, and batches are addressed by index, so the set of examples seen
// does not depend on in which order or on how many workers batches are drawn.
struct Dataset {
  DataDistribution dist;
  Split split = Split::Train;
  std::uint64_t seed = 0;

  Eigen::Index dim() const { return data_dim(dist); }
  Rng stream(std::uint64_t batch_index) const;
};

// One sample per row.
Eigen::MatrixXd sample_batch(const Dataset& ds, int n, Rng& rng);
Eigen::MatrixXd sample_batch(const Dataset& ds, int n, std::uint64_t batch_index);

double true_logpdf(const DataDistribution& dist, const Eigen::VectorXd& x);

// Differential entropy in nats. Closed form for the Gaussian; Monte Carlo
// for the mixture. Not defined for discrete images.
double true_entropy(const DataDistribution& dist, int n_mc, Rng& rng);

// First two moments (diagonal). Not defined for discrete images.
void data_moments(const DataDistribution& dist, Eigen::VectorXd* mean,
                  Eigen::VectorXd* var);

}  // namespace scorekit
