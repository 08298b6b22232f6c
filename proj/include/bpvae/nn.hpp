// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BPVAE_NN_HPP
#define BPVAE_NN_HPP

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bpvae/rng.hpp"

namespace bpvae::nn {

/// A trainable parameter with its accumulated gradient. Vectors are stored
/// as single-column matrices.
struct Tensor {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;

  Tensor() = default;
  Tensor(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)),
        value(Eigen::MatrixXd::Zero(rows, cols)),
        grad(Eigen::MatrixXd::Zero(rows, cols)) {}

  Eigen::Index size() const { return value.size(); }
  void zero_grad() { grad.setZero(); }
};

/// Minimal layer protocol. Activations are [features x batch]; forward
/// caches whatever backward needs, backward accumulates parameter gradients
/// and returns the gradient w.r.t. the layer input.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Eigen::MatrixXd forward(const Eigen::MatrixXd& x) = 0;
  virtual Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_out) = 0;
  virtual std::vector<Tensor*> params() { return {}; }
  virtual std::string kind() const = 0;
};

/// Affine layer: y = W x + b.
class Dense : public Layer {
 public:
  Dense(Eigen::Index in_dim, Eigen::Index out_dim, Rng& rng, std::string name,
        double init_scale = 1.0);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) override;
  Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_out) override;
  std::vector<Tensor*> params() override { return {&w_, &b_}; }
  std::string kind() const override { return "dense"; }

  Eigen::Index in_dim() const { return w_.value.cols(); }
  Eigen::Index out_dim() const { return w_.value.rows(); }

 private:
  Tensor w_, b_;
  Eigen::MatrixXd x_;
};

class Relu : public Layer {
 public:
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) override;
  Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_out) override;
  std::string kind() const override { return "relu"; }

 private:
  Eigen::ArrayXXd mask_;
};

/// 1D convolution along a position axis (frequency bins), stride 1, zero
/// padding to preserve length. Activations use a channel-fastest layout:
/// feature index = channel + channels * position, so a conv output doubles
/// as a flat feature vector and no explicit flatten layer is needed.
/// Implemented as im2col + GEMM.
class Conv1d : public Layer {
 public:
  Conv1d(Eigen::Index in_channels, Eigen::Index out_channels,
         Eigen::Index kernel, Eigen::Index positions, Rng& rng,
         std::string name);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) override;
  Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_out) override;
  std::vector<Tensor*> params() override { return {&w_, &b_}; }
  std::string kind() const override { return "conv1d"; }

  Eigen::Index out_features() const { return cout_ * pos_; }

 private:
  Eigen::Index cin_, cout_, k_, pos_;
  Tensor w_;  // [cout x cin*k]
  Tensor b_;  // [cout x 1]
  Eigen::MatrixXd cols_;  // cached im2col of the last forward input
  Eigen::Index batch_ = 0;
};

/// Ordered stack of layers sharing one forward/backward pass.
class Sequential {
 public:
  template <typename L, typename... Args>
  L& emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_out);
  std::vector<Tensor*> params();
  bool empty() const { return layers_.empty(); }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction over a fixed parameter set.
class Adam {
 public:
  Adam(std::vector<Tensor*> params, AdamConfig cfg);

  void zero_grad();
  void step();
  void set_lr(double lr) { cfg_.lr = lr; }
  double lr() const { return cfg_.lr; }

 private:
  std::vector<Tensor*> params_;
  std::vector<Eigen::MatrixXd> m_, v_;
  AdamConfig cfg_;
  long t_ = 0;
};

/// Total element count over a parameter set.
long param_count(const std::vector<Tensor*>& params);

}  // namespace bpvae::nn

#endif  // BPVAE_NN_HPP
