// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BPVAE_GAUSSIAN_HPP
#define BPVAE_GAUSSIAN_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace bpvae {

inline constexpr double kLogTwoPi = 1.8378770664093454836;

/// Diagonal Gaussian over R^L, parameterized by mean and log-variance.
/// log_var is the stored parameterization so optimization stays
/// unconstrained; variances are exp(log_var) > 0 by construction.
template <typename Scalar>
struct DiagonalGaussianT {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector mean;
  Vector log_var;

  DiagonalGaussianT() = default;
  DiagonalGaussianT(Vector mu, Vector lv)
      : mean(std::move(mu)), log_var(std::move(lv)) {
    if (mean.size() != log_var.size())
      throw std::invalid_argument("DiagonalGaussian: mean/log_var size mismatch");
    if (!log_var.allFinite() || !mean.allFinite())
      throw std::invalid_argument("DiagonalGaussian: non-finite parameters");
  }

  Eigen::Index dim() const { return mean.size(); }

  static DiagonalGaussianT standard(Eigen::Index dim) {
    return DiagonalGaussianT(Vector::Zero(dim), Vector::Zero(dim));
  }
};

using DiagonalGaussian = DiagonalGaussianT<double>;

/// A draw from one of the model posteriors, tagged with its source.
struct LatentSample {
  Eigen::VectorXd value;
  std::string source;
};

namespace detail {
template <typename Scalar>
void check_same_dim(const DiagonalGaussianT<Scalar>& a,
                    const DiagonalGaussianT<Scalar>& b, const char* op) {
  if (a.dim() != b.dim())
    throw std::invalid_argument(std::string(op) + ": dimension mismatch (" +
                                std::to_string(a.dim()) + " vs " +
                                std::to_string(b.dim()) + ")");
}
}  // namespace detail

/// Reparameterized draw: mean + exp(log_var / 2) .* eps. The noise is
/// injected by the caller, which keeps every use deterministic under a seed
/// and makes the draw differentiable in mean and log_var.
template <typename Scalar>
DiagonalGaussianT<Scalar>::Vector sample_value(
    const DiagonalGaussianT<Scalar>& g,
    const typename DiagonalGaussianT<Scalar>::Vector& eps) {
  if (eps.size() != g.dim())
    throw std::invalid_argument("sample: eps dimension mismatch");
  return g.mean.array() + (g.log_var.array() * Scalar(0.5)).exp() * eps.array();
}

inline LatentSample sample(const DiagonalGaussian& g, const Eigen::VectorXd& eps,
                           std::string source = {}) {
  return LatentSample{sample_value(g, eps), std::move(source)};
}

/// Pullback of sample_value: maps d(loss)/d(value) to gradients in
/// (mean, log_var).
template <typename Scalar>
std::pair<typename DiagonalGaussianT<Scalar>::Vector,
          typename DiagonalGaussianT<Scalar>::Vector>
sample_backward(const DiagonalGaussianT<Scalar>& g,
                const typename DiagonalGaussianT<Scalar>::Vector& eps,
                const typename DiagonalGaussianT<Scalar>::Vector& grad_value) {
  if (eps.size() != g.dim() || grad_value.size() != g.dim())
    throw std::invalid_argument("sample_backward: dimension mismatch");
  using Vector = typename DiagonalGaussianT<Scalar>::Vector;
  Vector grad_mean = grad_value;
  Vector grad_log_var =
      (grad_value.array() * eps.array() *
       (g.log_var.array() * Scalar(0.5)).exp() * Scalar(0.5))
          .matrix();
  return {std::move(grad_mean), std::move(grad_log_var)};
}

/// Log density of z under g.
template <typename Scalar>
Scalar log_pdf(const DiagonalGaussianT<Scalar>& g,
               const typename DiagonalGaussianT<Scalar>::Vector& z) {
  if (z.size() != g.dim()) throw std::invalid_argument("log_pdf: dimension mismatch");
  if (!z.allFinite()) throw std::invalid_argument("log_pdf: non-finite point");
  const auto diff = (z - g.mean).array();
  return Scalar(-0.5) *
         (Scalar(kLogTwoPi) * g.dim() + g.log_var.sum() +
          (diff.square() * (-g.log_var.array()).exp()).sum());
}

/// KL(p || q) in closed form; nonnegative, zero iff p == q.
template <typename Scalar>
Scalar kl(const DiagonalGaussianT<Scalar>& p, const DiagonalGaussianT<Scalar>& q) {
  detail::check_same_dim(p, q, "kl");
  const auto var_ratio = (p.log_var.array() - q.log_var.array()).exp();
  const auto mean_term =
      (p.mean.array() - q.mean.array()).square() * (-q.log_var.array()).exp();
  return Scalar(0.5) * (q.log_var.array() - p.log_var.array() + var_ratio +
                        mean_term - Scalar(1))
                           .sum();
}

/// Cross-entropy H(p, q) = -E_{z~p}[log q(z)] in closed form.
template <typename Scalar>
Scalar cross_entropy(const DiagonalGaussianT<Scalar>& p,
                     const DiagonalGaussianT<Scalar>& q) {
  detail::check_same_dim(p, q, "cross_entropy");
  const auto second_moment =
      (p.log_var.array().exp() + (p.mean.array() - q.mean.array()).square()) *
      (-q.log_var.array()).exp();
  return Scalar(0.5) *
         (Scalar(kLogTwoPi) * p.dim() + q.log_var.sum() + second_moment.sum());
}

/// Differential entropy H(p) = cross_entropy(p, p).
template <typename Scalar>
Scalar entropy(const DiagonalGaussianT<Scalar>& p) {
  return Scalar(0.5) * (Scalar(kLogTwoPi) * p.dim() + p.dim() + p.log_var.sum());
}

// ---- Batched forms over [L x B] parameter matrices (one column per frame).

/// Per-column KL(p || q); returns a length-B row array.
template <typename DA, typename DB, typename DC, typename DD>
Eigen::Array<typename DA::Scalar, 1, Eigen::Dynamic> kl_colwise(
    const Eigen::MatrixBase<DA>& mean_p, const Eigen::MatrixBase<DB>& log_var_p,
    const Eigen::MatrixBase<DC>& mean_q, const Eigen::MatrixBase<DD>& log_var_q) {
  using Scalar = typename DA::Scalar;
  return (Scalar(0.5) *
          (log_var_q.array() - log_var_p.array() +
           (log_var_p.array() - log_var_q.array()).exp() +
           (mean_p.array() - mean_q.array()).square() * (-log_var_q.array()).exp() -
           Scalar(1)))
      .colwise()
      .sum();
}

/// Per-column cross-entropy H(p, q); returns a length-B row array.
template <typename DA, typename DB, typename DC, typename DD>
Eigen::Array<typename DA::Scalar, 1, Eigen::Dynamic> cross_entropy_colwise(
    const Eigen::MatrixBase<DA>& mean_p, const Eigen::MatrixBase<DB>& log_var_p,
    const Eigen::MatrixBase<DC>& mean_q, const Eigen::MatrixBase<DD>& log_var_q) {
  using Scalar = typename DA::Scalar;
  return (Scalar(0.5) *
          (Scalar(kLogTwoPi) + log_var_q.array() +
           (log_var_p.array().exp() +
            (mean_p.array() - mean_q.array()).square()) *
               (-log_var_q.array()).exp()))
      .colwise()
      .sum();
}

/// Per-column log density of targets z ([L x B]) under column-wise Gaussians.
template <typename DA, typename DB, typename DC>
Eigen::Array<typename DA::Scalar, 1, Eigen::Dynamic> log_pdf_colwise(
    const Eigen::MatrixBase<DA>& mean, const Eigen::MatrixBase<DB>& log_var,
    const Eigen::MatrixBase<DC>& z) {
  using Scalar = typename DA::Scalar;
  return (Scalar(-0.5) *
          (Scalar(kLogTwoPi) + log_var.array() +
           (z.array() - mean.array()).square() * (-log_var.array()).exp()))
      .colwise()
      .sum();
}

}  // namespace bpvae

#endif  // BPVAE_GAUSSIAN_HPP
