#pragma once

#include <Eigen/Dense>
#include <vector>

#include "scorekit/rng.hpp"

namespace scorekit {

// Small dense tanh network over a flat parameter vector. The last layer is
// linear without bias. Gradients are hand-rolled: reverse mode with respect
// to parameters or inputs, forward mode (directional derivative) with
// respect to inputs. Parameters live outside the object so optimizers and
// checkpoints can treat them as a plain vector.
class Mlp {
 public:
  Mlp(Eigen::Index in_dim, std::vector<Eigen::Index> hidden,
      Eigen::Index out_dim);

  Eigen::Index in_dim() const { return dims_.front(); }
  Eigen::Index out_dim() const { return dims_.back(); }
  const std::vector<Eigen::Index>& dims() const { return dims_; }
  Eigen::Index param_count() const { return param_count_; }

  // Glorot-uniform weights, zero biases. final_scale multiplies the last
  // layer, so 0 yields an identically-zero function with nonzero hidden
  // features (useful for identity-at-init heads).
  Eigen::VectorXd init_params(Rng& rng, double final_scale = 1.0) const;

  Eigen::VectorXd forward(const Eigen::VectorXd& params,
                          const Eigen::VectorXd& in) const;

  // d(upstream . f(in)) / d params.
  Eigen::VectorXd param_grad(const Eigen::VectorXd& params,
                             const Eigen::VectorXd& in,
                             const Eigen::VectorXd& upstream) const;

  // Jacobian-vector product J(in) v.
  Eigen::VectorXd input_jvp(const Eigen::VectorXd& params,
                            const Eigen::VectorXd& in,
                            const Eigen::VectorXd& v) const;

  // Transposed product J(in)^T upstream.
  Eigen::VectorXd input_vjp(const Eigen::VectorXd& params,
                            const Eigen::VectorXd& in,
                            const Eigen::VectorXd& upstream) const;

 private:
  struct Cache {
    std::vector<Eigen::VectorXd> activations;  // a_0 = in, then per layer
  };

  Eigen::Index n_layers() const {
    return static_cast<Eigen::Index>(dims_.size()) - 1;
  }
  bool layer_has_bias(Eigen::Index layer) const {
    return layer != n_layers() - 1;
  }
  Eigen::Index weight_offset(Eigen::Index layer) const {
    return offsets_[static_cast<std::size_t>(layer)];
  }

  Eigen::VectorXd forward_cached(const Eigen::VectorXd& params,
                                 const Eigen::VectorXd& in, Cache* cache) const;

  void check_params(const Eigen::VectorXd& params) const;

  std::vector<Eigen::Index> dims_;
  std::vector<Eigen::Index> offsets_;  // start of each layer's weight block
  Eigen::Index param_count_ = 0;
};

}  // namespace scorekit
