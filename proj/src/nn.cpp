// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bpvae/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace bpvae::nn {

namespace {

// Fan-in-scaled uniform init, U(-sqrt(6/fan_in), +sqrt(6/fan_in)).
void init_uniform(Eigen::MatrixXd& w, Eigen::Index fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (Eigen::Index j = 0; j < w.cols(); j++)
    for (Eigen::Index i = 0; i < w.rows(); i++)
      w(i, j) = (2.0 * rng.uniform() - 1.0) * bound;
}

}  // namespace

Dense::Dense(Eigen::Index in_dim, Eigen::Index out_dim, Rng& rng,
             std::string name, double init_scale)
    : w_(name + ".w", out_dim, in_dim), b_(name + ".b", out_dim, 1) {
  if (in_dim <= 0 || out_dim <= 0)
    throw std::invalid_argument("Dense: non-positive dimensions");
  Rng local = rng.fork(w_.name);
  init_uniform(w_.value, in_dim, local);
  if (init_scale != 1.0) w_.value *= init_scale;
}

Eigen::MatrixXd Dense::forward(const Eigen::MatrixXd& x) {
  if (x.rows() != w_.value.cols())
    throw std::invalid_argument("Dense " + w_.name + ": input has " +
                                std::to_string(x.rows()) + " features, want " +
                                std::to_string(w_.value.cols()));
  x_ = x;
  return (w_.value * x).colwise() + b_.value.col(0);
}

Eigen::MatrixXd Dense::backward(const Eigen::MatrixXd& grad_out) {
  w_.grad.noalias() += grad_out * x_.transpose();
  b_.grad.col(0).noalias() += grad_out.rowwise().sum();
  return w_.value.transpose() * grad_out;
}

Eigen::MatrixXd Relu::forward(const Eigen::MatrixXd& x) {
  mask_ = (x.array() > 0.0).cast<double>();
  return x.cwiseMax(0.0);
}

Eigen::MatrixXd Relu::backward(const Eigen::MatrixXd& grad_out) {
  return (grad_out.array() * mask_).matrix();
}

Conv1d::Conv1d(Eigen::Index in_channels, Eigen::Index out_channels,
               Eigen::Index kernel, Eigen::Index positions, Rng& rng,
               std::string name)
    : cin_(in_channels),
      cout_(out_channels),
      k_(kernel),
      pos_(positions),
      w_(name + ".w", out_channels, in_channels * kernel),
      b_(name + ".b", out_channels, 1) {
  if (cin_ <= 0 || cout_ <= 0 || pos_ <= 0)
    throw std::invalid_argument("Conv1d: non-positive dimensions");
  if (k_ <= 0 || k_ % 2 == 0)
    throw std::invalid_argument("Conv1d: kernel must be odd and positive");
  Rng local = rng.fork(w_.name);
  init_uniform(w_.value, cin_ * k_, local);
  // A ReLU-dead receptive field leaves the pre-activation exactly at the
  // bias; a zero bias would pin it on the ReLU kink, where the objective is
  // not differentiable. A small positive bias keeps such units off the kink
  // (and trainable).
  b_.value.setConstant(0.01);
}

Eigen::MatrixXd Conv1d::forward(const Eigen::MatrixXd& x) {
  if (x.rows() != cin_ * pos_)
    throw std::invalid_argument("Conv1d " + w_.name + ": bad input rows");
  batch_ = x.cols();
  const Eigen::Index half = k_ / 2;

  cols_.setZero(cin_ * k_, pos_ * batch_);
  for (Eigen::Index b = 0; b < batch_; b++) {
    for (Eigen::Index p = 0; p < pos_; p++) {
      const Eigen::Index q = p + pos_ * b;
      for (Eigen::Index t = 0; t < k_; t++) {
        const Eigen::Index src = p + t - half;
        if (src < 0 || src >= pos_) continue;
        cols_.block(t * cin_, q, cin_, 1) = x.block(src * cin_, b, cin_, 1);
      }
    }
  }

  Eigen::MatrixXd out_col = (w_.value * cols_).colwise() + b_.value.col(0);
  // [cout x pos*batch] and [cout*pos x batch] share one column-major buffer.
  return Eigen::Map<Eigen::MatrixXd>(out_col.data(), cout_ * pos_, batch_);
}

Eigen::MatrixXd Conv1d::backward(const Eigen::MatrixXd& grad_out) {
  Eigen::Map<const Eigen::MatrixXd> g_col(grad_out.data(), cout_,
                                          pos_ * batch_);
  w_.grad.noalias() += g_col * cols_.transpose();
  b_.grad.col(0).noalias() += g_col.rowwise().sum();

  Eigen::MatrixXd g_cols = w_.value.transpose() * g_col;
  const Eigen::Index half = k_ / 2;
  Eigen::MatrixXd grad_in = Eigen::MatrixXd::Zero(cin_ * pos_, batch_);
  for (Eigen::Index b = 0; b < batch_; b++) {
    for (Eigen::Index p = 0; p < pos_; p++) {
      const Eigen::Index q = p + pos_ * b;
      for (Eigen::Index t = 0; t < k_; t++) {
        const Eigen::Index src = p + t - half;
        if (src < 0 || src >= pos_) continue;
        grad_in.block(src * cin_, b, cin_, 1) += g_cols.block(t * cin_, q, cin_, 1);
      }
    }
  }
  return grad_in;
}

Eigen::MatrixXd Sequential::forward(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd h = x;
  for (auto& l : layers_) h = l->forward(h);
  return h;
}

Eigen::MatrixXd Sequential::backward(const Eigen::MatrixXd& grad_out) {
  Eigen::MatrixXd g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
    g = (*it)->backward(g);
  return g;
}

std::vector<Tensor*> Sequential::params() {
  std::vector<Tensor*> out;
  for (auto& l : layers_)
    for (Tensor* t : l->params()) out.push_back(t);
  return out;
}

Adam::Adam(std::vector<Tensor*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Tensor* t : params_) {
    m_.push_back(Eigen::MatrixXd::Zero(t->value.rows(), t->value.cols()));
    v_.push_back(Eigen::MatrixXd::Zero(t->value.rows(), t->value.cols()));
  }
}

void Adam::zero_grad() {
  for (Tensor* t : params_) t->zero_grad();
}

void Adam::step() {
  t_++;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); i++) {
    Tensor* p = params_[i];
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * p->grad;
    v_[i] = (cfg_.beta2 * v_[i].array() +
             (1.0 - cfg_.beta2) * p->grad.array().square())
                .matrix();
    p->value.array() -=
        cfg_.lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + cfg_.eps);
  }
}

long param_count(const std::vector<Tensor*>& params) {
  long n = 0;
  for (const Tensor* t : params) n += static_cast<long>(t->size());
  return n;
}

}  // namespace bpvae::nn
