#include "scorekit/data.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "scorekit/errors.hpp"

namespace scorekit {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

double gaussian_logpdf_diag(const Eigen::VectorXd& x, const Eigen::VectorXd& m,
                            const Eigen::VectorXd& v) {
  double acc = 0.0;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    const double r = x[d] - m[d];
    acc += -0.5 * std::log(kTwoPi * v[d]) - 0.5 * r * r / v[d];
  }
  return acc;
}
}  // namespace

void GaussianData::validate() const {
  if (mean.size() == 0 || var.size() != mean.size()) {
    throw std::invalid_argument("GaussianData: mean/var must be nonempty and equal length");
  }
  if ((var.array() <= 0.0).any()) {
    throw std::invalid_argument("GaussianData: var must be positive");
  }
}

void GaussianMixtureData::validate() const {
  if (weights.empty() || weights.size() != means.size() ||
      weights.size() != vars.size()) {
    throw std::invalid_argument("GaussianMixtureData: inconsistent component lists");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("GaussianMixtureData: weights must be positive");
    total += w;
  }
  if (std::fabs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("GaussianMixtureData: weights must sum to 1");
  }
  const Eigen::Index d = dim();
  for (std::size_t k = 0; k < means.size(); ++k) {
    if (means[k].size() != d || vars[k].size() != d) {
      throw std::invalid_argument("GaussianMixtureData: component dim mismatch");
    }
    if ((vars[k].array() <= 0.0).any()) {
      throw std::invalid_argument("GaussianMixtureData: vars must be positive");
    }
  }
}

GaussianMixtureData GaussianMixtureData::two_modes(Eigen::Index dim) {
  GaussianMixtureData mix;
  mix.weights = {0.5, 0.5};
  mix.means = {Eigen::VectorXd::Constant(dim, 2.0),
               Eigen::VectorXd::Constant(dim, -2.0)};
  mix.vars = {Eigen::VectorXd::Ones(dim), Eigen::VectorXd::Ones(dim)};
  return mix;
}

void DiscreteImageData::validate() const {
  if (side <= 0 || levels < 2) {
    throw std::invalid_argument("DiscreteImageData: need side > 0 and levels >= 2");
  }
}

Eigen::Index data_dim(const DataDistribution& dist) {
  return std::visit([](const auto& d) { return d.dim(); }, dist);
}

Rng Dataset::stream(std::uint64_t batch_index) const {
  const std::uint64_t split_tag = split == Split::Train ? 1 : 2;
  return Rng(seed).fork(split_tag).fork(batch_index);
}

namespace {

Eigen::VectorXd sample_one(const GaussianData& g, Rng& rng) {
  return g.mean + (g.var.array().sqrt() * rng.normal_vector(g.dim()).array()).matrix();
}

Eigen::VectorXd sample_one(const GaussianMixtureData& mix, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t pick = mix.weights.size() - 1;
  for (std::size_t k = 0; k < mix.weights.size(); ++k) {
    acc += mix.weights[k];
    if (u < acc) {
      pick = k;
      break;
    }
  }
  return mix.means[pick] +
         (mix.vars[pick].array().sqrt() * rng.normal_vector(mix.dim()).array())
             .matrix();
}

Eigen::VectorXd sample_one(const DiscreteImageData& img, Rng& rng) {
  constexpr int kWaves = 3;
  double amp[kWaves], fx[kWaves], fy[kWaves], phase[kWaves];
  for (int m = 0; m < kWaves; ++m) {
    amp[m] = rng.uniform(0.5, 1.5);
    fx[m] = rng.uniform(0.25, 1.25);
    fy[m] = rng.uniform(0.25, 1.25);
    phase[m] = rng.uniform(0.0, kTwoPi);
  }
  Eigen::VectorXd field(img.dim());
  for (int r = 0; r < img.side; ++r) {
    for (int c = 0; c < img.side; ++c) {
      double v = 0.0;
      for (int m = 0; m < kWaves; ++m) {
        v += amp[m] * std::sin(kTwoPi * (fx[m] * r + fy[m] * c) /
                                   static_cast<double>(img.side) +
                               phase[m]);
      }
      field[r * img.side + c] = v;
    }
  }
  const double lo = field.minCoeff();
  const double hi = field.maxCoeff();
  const double span = std::max(hi - lo, 1e-12);
  for (Eigen::Index i = 0; i < field.size(); ++i) {
    const double unit = (field[i] - lo) / span;
    int level = static_cast<int>(unit * img.levels);
    if (level >= img.levels) level = img.levels - 1;
    field[i] = static_cast<double>(level);
  }
  return field;
}

}  // namespace

Eigen::MatrixXd sample_batch(const Dataset& ds, int n, Rng& rng) {
  if (n <= 0) throw std::invalid_argument("sample_batch: n must be positive");
  std::visit([](const auto& d) { d.validate(); }, ds.dist);
  Eigen::MatrixXd batch(n, ds.dim());
  for (int i = 0; i < n; ++i) {
    batch.row(i) =
        std::visit([&](const auto& d) { return sample_one(d, rng); }, ds.dist)
            .transpose();
  }
  return batch;
}

Eigen::MatrixXd sample_batch(const Dataset& ds, int n, std::uint64_t batch_index) {
  Rng rng = ds.stream(batch_index);
  return sample_batch(ds, n, rng);
}

double true_logpdf(const DataDistribution& dist, const Eigen::VectorXd& x) {
  if (const auto* g = std::get_if<GaussianData>(&dist)) {
    return gaussian_logpdf_diag(x, g->mean, g->var);
  }
  if (const auto* mix = std::get_if<GaussianMixtureData>(&dist)) {
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(mix->weights.size());
    for (std::size_t k = 0; k < mix->weights.size(); ++k) {
      terms[k] = std::log(mix->weights[k]) +
                 gaussian_logpdf_diag(x, mix->means[k], mix->vars[k]);
      best = std::max(best, terms[k]);
    }
    double acc = 0.0;
    for (double lt : terms) acc += std::exp(lt - best);
    return best + std::log(acc);
  }
  throw UnsupportedError("true_logpdf: not defined for discrete image data");
}

double true_entropy(const DataDistribution& dist, int n_mc, Rng& rng) {
  if (const auto* g = std::get_if<GaussianData>(&dist)) {
    double h = 0.0;
    for (Eigen::Index d = 0; d < g->dim(); ++d) {
      h += 0.5 * (1.0 + std::log(kTwoPi * g->var[d]));
    }
    return h;
  }
  if (std::holds_alternative<GaussianMixtureData>(dist)) {
    if (n_mc <= 0) throw std::invalid_argument("true_entropy: n_mc must be positive");
    double acc = 0.0;
    for (int i = 0; i < n_mc; ++i) {
      const Eigen::VectorXd x =
          sample_one(std::get<GaussianMixtureData>(dist), rng);
      acc -= true_logpdf(dist, x);
    }
    return acc / n_mc;
  }
  throw UnsupportedError("true_entropy: not defined for discrete image data");
}

void data_moments(const DataDistribution& dist, Eigen::VectorXd* mean,
                  Eigen::VectorXd* var) {
  if (const auto* g = std::get_if<GaussianData>(&dist)) {
    if (mean) *mean = g->mean;
    if (var) *var = g->var;
    return;
  }
  if (const auto* mix = std::get_if<GaussianMixtureData>(&dist)) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(mix->dim());
    for (std::size_t k = 0; k < mix->weights.size(); ++k) {
      m += mix->weights[k] * mix->means[k];
    }
    if (mean) *mean = m;
    if (var) {
      Eigen::VectorXd second = Eigen::VectorXd::Zero(mix->dim());
      for (std::size_t k = 0; k < mix->weights.size(); ++k) {
        second += mix->weights[k] *
                  (mix->vars[k].array() + mix->means[k].array().square())
                      .matrix();
      }
      *var = second - m.array().square().matrix();
    }
    return;
  }
  throw UnsupportedError("data_moments: not defined for discrete image data");
}

}  // namespace scorekit
