#include "scorekit/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace scorekit {

namespace {
using Eigen::Index;
using ConstMat = Eigen::Map<const Eigen::MatrixXd>;
using ConstVec = Eigen::Map<const Eigen::VectorXd>;
using MutMat = Eigen::Map<Eigen::MatrixXd>;
using MutVec = Eigen::Map<Eigen::VectorXd>;
}  // namespace

Mlp::Mlp(Index in_dim, std::vector<Index> hidden, Index out_dim) {
  if (in_dim <= 0 || out_dim <= 0) {
    throw std::invalid_argument("Mlp: dimensions must be positive");
  }
  for (Index h : hidden) {
    if (h <= 0) throw std::invalid_argument("Mlp: hidden widths must be positive");
  }
  dims_.push_back(in_dim);
  dims_.insert(dims_.end(), hidden.begin(), hidden.end());
  dims_.push_back(out_dim);

  Index offset = 0;
  for (Index l = 0; l < n_layers(); ++l) {
    offsets_.push_back(offset);
    offset += dims_[l + 1] * dims_[l];
    if (layer_has_bias(l)) offset += dims_[l + 1];
  }
  param_count_ = offset;
}

void Mlp::check_params(const Eigen::VectorXd& params) const {
  if (params.size() != param_count_) {
    throw std::invalid_argument("Mlp: parameter vector has wrong length");
  }
}

Eigen::VectorXd Mlp::init_params(Rng& rng, double final_scale) const {
  Eigen::VectorXd params = Eigen::VectorXd::Zero(param_count_);
  for (Index l = 0; l < n_layers(); ++l) {
    const Index rows = dims_[l + 1];
    const Index cols = dims_[l];
    double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    if (l == n_layers() - 1) bound *= final_scale;
    MutMat w(params.data() + weight_offset(l), rows, cols);
    for (Index j = 0; j < cols; ++j) {
      for (Index i = 0; i < rows; ++i) {
        w(i, j) = rng.uniform(-bound, bound);
      }
    }
    // biases stay zero
  }
  return params;
}

Eigen::VectorXd Mlp::forward_cached(const Eigen::VectorXd& params,
                                    const Eigen::VectorXd& in,
                                    Cache* cache) const {
  check_params(params);
  if (in.size() != in_dim()) {
    throw std::invalid_argument("Mlp: input vector has wrong length");
  }
  Eigen::VectorXd a = in;
  if (cache) cache->activations.push_back(a);
  for (Index l = 0; l < n_layers(); ++l) {
    const Index rows = dims_[l + 1];
    const Index cols = dims_[l];
    ConstMat w(params.data() + weight_offset(l), rows, cols);
    Eigen::VectorXd z = w * a;
    if (layer_has_bias(l)) {
      ConstVec b(params.data() + weight_offset(l) + rows * cols, rows);
      z += b;
      a = z.array().tanh().matrix();
    } else {
      a = z;  // linear head
    }
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& params,
                             const Eigen::VectorXd& in) const {
  return forward_cached(params, in, nullptr);
}

Eigen::VectorXd Mlp::param_grad(const Eigen::VectorXd& params,
                                const Eigen::VectorXd& in,
                                const Eigen::VectorXd& upstream) const {
  if (upstream.size() != out_dim()) {
    throw std::invalid_argument("Mlp::param_grad: bad upstream length");
  }
  Cache cache;
  forward_cached(params, in, &cache);

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(param_count_);
  Eigen::VectorXd delta = upstream;  // d loss / d z_l, starting at the head
  for (Index l = n_layers() - 1; l >= 0; --l) {
    const Index rows = dims_[l + 1];
    const Index cols = dims_[l];
    const Eigen::VectorXd& a_prev = cache.activations[static_cast<std::size_t>(l)];
    MutMat gw(grad.data() + weight_offset(l), rows, cols);
    gw.noalias() = delta * a_prev.transpose();
    if (layer_has_bias(l)) {
      MutVec gb(grad.data() + weight_offset(l) + rows * cols, rows);
      gb = delta;
    }
    if (l > 0) {
      ConstMat w(params.data() + weight_offset(l), rows, cols);
      Eigen::VectorXd back = w.transpose() * delta;
      // a_prev is tanh output of layer l-1, so tanh' = 1 - a^2.
      delta = (back.array() * (1.0 - a_prev.array().square())).matrix();
    }
  }
  return grad;
}

Eigen::VectorXd Mlp::input_jvp(const Eigen::VectorXd& params,
                               const Eigen::VectorXd& in,
                               const Eigen::VectorXd& v) const {
  if (v.size() != in_dim()) {
    throw std::invalid_argument("Mlp::input_jvp: bad direction length");
  }
  check_params(params);
  Eigen::VectorXd a = in;
  Eigen::VectorXd tangent = v;
  for (Index l = 0; l < n_layers(); ++l) {
    const Index rows = dims_[l + 1];
    const Index cols = dims_[l];
    ConstMat w(params.data() + weight_offset(l), rows, cols);
    Eigen::VectorXd z = w * a;
    Eigen::VectorXd dz = w * tangent;
    if (layer_has_bias(l)) {
      ConstVec b(params.data() + weight_offset(l) + rows * cols, rows);
      z += b;
      a = z.array().tanh().matrix();
      tangent = (dz.array() * (1.0 - a.array().square())).matrix();
    } else {
      a = z;
      tangent = dz;
    }
  }
  return tangent;
}

Eigen::VectorXd Mlp::input_vjp(const Eigen::VectorXd& params,
                               const Eigen::VectorXd& in,
                               const Eigen::VectorXd& upstream) const {
  if (upstream.size() != out_dim()) {
    throw std::invalid_argument("Mlp::input_vjp: bad upstream length");
  }
  Cache cache;
  forward_cached(params, in, &cache);
  Eigen::VectorXd delta = upstream;
  for (Index l = n_layers() - 1; l >= 0; --l) {
    const Index rows = dims_[l + 1];
    const Index cols = dims_[l];
    ConstMat w(params.data() + weight_offset(l), rows, cols);
    Eigen::VectorXd back = w.transpose() * delta;
    if (l > 0) {
      const Eigen::VectorXd& a_prev = cache.activations[static_cast<std::size_t>(l)];
      delta = (back.array() * (1.0 - a_prev.array().square())).matrix();
    } else {
      delta = back;
    }
  }
  return delta;
}

}  // namespace scorekit
