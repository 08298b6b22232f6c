// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bpvae/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bpvae {

namespace {

void check_finite(double v, const char* term) {
  if (!std::isfinite(v))
    throw std::runtime_error(std::string("loss term non-finite: ") + term);
}

// Shared Eq. (6) latent block for one head: KL to the clean posterior plus
// the expectation-ratio term, evaluated in closed form.
std::pair<double, double> latent_terms(const DiagonalGaussian& y_post,
                                       const DiagonalGaussian& clean_post,
                                       const DiagonalGaussian& prior) {
  const double kl_term = kl(y_post, clean_post);
  const double ratio =
      cross_entropy(y_post, prior) - cross_entropy(y_post, clean_post);
  return {kl_term, ratio};
}

GaussianBatch broadcast(const DiagonalGaussian& g, Eigen::Index cols) {
  return GaussianBatch{g.mean.replicate(1, cols), g.log_var.replicate(1, cols)};
}

}  // namespace

LossBreakdown vae_loss(const DiagonalGaussian& posterior,
                       const DiagonalGaussian& prior,
                       const DiagonalGaussian& likelihood,
                       const Eigen::VectorXd& target, double beta) {
  if (beta < 0.0) throw std::invalid_argument("vae_loss: beta must be >= 0");
  LossBreakdown b;
  b.alpha = 1.0;
  b.beta = beta;
  b.kl_speech = kl(posterior, prior);
  b.reconstruction = log_pdf(likelihood, target);
  check_finite(b.kl_speech, "kl");
  check_finite(b.reconstruction, "reconstruction");
  b.total = beta * b.kl_speech - b.reconstruction;
  return b;
}

LossBreakdown beta_pvae_loss(const DiagonalGaussian& y_post_x,
                             const DiagonalGaussian& y_post_d,
                             const DiagonalGaussian& x_post,
                             const DiagonalGaussian& d_post,
                             const DiagonalGaussian& prior,
                             const DiagonalGaussian& y_likelihood,
                             const Eigen::VectorXd& y_target, double alpha,
                             double beta) {
  if (alpha < 0.0 || beta < 0.0)
    throw std::invalid_argument("beta_pvae_loss: weights must be >= 0");
  if (alpha == 0.0 && beta == 0.0)
    throw std::invalid_argument("beta_pvae_loss: degenerate objective");
  LossBreakdown b;
  b.alpha = alpha;
  b.beta = beta;
  std::tie(b.kl_speech, b.latent_ratio_speech) =
      latent_terms(y_post_x, x_post, prior);
  std::tie(b.kl_noise, b.latent_ratio_noise) =
      latent_terms(y_post_d, d_post, prior);
  b.reconstruction = log_pdf(y_likelihood, y_target);
  check_finite(b.kl_speech, "kl_speech");
  check_finite(b.kl_noise, "kl_noise");
  check_finite(b.latent_ratio_speech, "latent_ratio_speech");
  check_finite(b.latent_ratio_noise, "latent_ratio_noise");
  check_finite(b.reconstruction, "reconstruction");
  b.total = beta * (b.kl_speech + b.latent_ratio_speech + b.kl_noise +
                    b.latent_ratio_noise) -
            alpha * b.reconstruction;
  return b;
}

LossBreakdown pvae_loss(const DiagonalGaussian& y_post_x,
                        const DiagonalGaussian& y_post_d,
                        const DiagonalGaussian& x_post,
                        const DiagonalGaussian& d_post,
                        const DiagonalGaussian& prior,
                        const DiagonalGaussian& y_likelihood,
                        const Eigen::VectorXd& y_target) {
  return beta_pvae_loss(y_post_x, y_post_d, x_post, d_post, prior,
                        y_likelihood, y_target, 1.0, 1.0);
}

LossBreakdown latent_only_loss(const DiagonalGaussian& y_post_x,
                               const DiagonalGaussian& y_post_d,
                               const DiagonalGaussian& x_post,
                               const DiagonalGaussian& d_post,
                               const DiagonalGaussian& prior, double beta) {
  if (beta <= 0.0) throw std::invalid_argument("latent_only_loss: beta must be > 0");
  LossBreakdown b;
  b.alpha = 0.0;
  b.beta = beta;
  std::tie(b.kl_speech, b.latent_ratio_speech) =
      latent_terms(y_post_x, x_post, prior);
  std::tie(b.kl_noise, b.latent_ratio_noise) =
      latent_terms(y_post_d, d_post, prior);
  check_finite(b.kl_speech, "kl_speech");
  check_finite(b.kl_noise, "kl_noise");
  b.total = beta * (b.kl_speech + b.latent_ratio_speech + b.kl_noise +
                    b.latent_ratio_noise) -
            0.0 * b.reconstruction;
  return b;
}

BatchTermGrad kl_mean_grad(const GaussianBatch& p, const GaussianBatch& q) {
  if (p.mean.rows() != q.mean.rows() || p.mean.cols() != q.mean.cols())
    throw std::invalid_argument("kl_mean_grad: shape mismatch");
  const double inv_b = 1.0 / static_cast<double>(p.batch());
  BatchTermGrad out;
  out.value = kl_colwise(p.mean, p.log_var, q.mean, q.log_var).mean();
  out.d_mean =
      ((p.mean.array() - q.mean.array()) * (-q.log_var.array()).exp() * inv_b)
          .matrix();
  out.d_log_var =
      (0.5 * ((p.log_var.array() - q.log_var.array()).exp() - 1.0) * inv_b)
          .matrix();
  return out;
}

BatchTermGrad kl_mean_grad(const GaussianBatch& p, const DiagonalGaussian& prior) {
  return kl_mean_grad(p, broadcast(prior, p.batch()));
}

BatchTermGrad log_pdf_mean_grad(const GaussianBatch& likelihood,
                                const Eigen::MatrixXd& target) {
  if (likelihood.mean.rows() != target.rows() ||
      likelihood.mean.cols() != target.cols())
    throw std::invalid_argument("log_pdf_mean_grad: shape mismatch");
  const double inv_b = 1.0 / static_cast<double>(likelihood.batch());
  const Eigen::ArrayXXd inv_var = (-likelihood.log_var.array()).exp();
  const Eigen::ArrayXXd diff = target.array() - likelihood.mean.array();
  BatchTermGrad out;
  out.value =
      log_pdf_colwise(likelihood.mean, likelihood.log_var, target).mean();
  out.d_mean = (diff * inv_var * inv_b).matrix();
  out.d_log_var = (-0.5 * (1.0 - diff.square() * inv_var) * inv_b).matrix();
  return out;
}

double ratio_mean(const GaussianBatch& p, const GaussianBatch& teacher,
                  const DiagonalGaussian& prior,
                  const Eigen::MatrixXd* sample_eps) {
  if (p.mean.rows() != teacher.mean.rows() ||
      p.mean.cols() != teacher.mean.cols())
    throw std::invalid_argument("ratio_mean: shape mismatch");
  const GaussianBatch pri = broadcast(prior, p.batch());
  if (sample_eps == nullptr) {
    return (cross_entropy_colwise(p.mean, p.log_var, pri.mean, pri.log_var) -
            cross_entropy_colwise(p.mean, p.log_var, teacher.mean,
                                  teacher.log_var))
        .mean();
  }
  const Eigen::MatrixXd z = sample_batch(p, *sample_eps);
  return (log_pdf_colwise(teacher.mean, teacher.log_var, z) -
          log_pdf_colwise(pri.mean, pri.log_var, z))
      .mean();
}

Eigen::MatrixXd sample_batch(const GaussianBatch& g, const Eigen::MatrixXd& eps) {
  if (eps.rows() != g.mean.rows() || eps.cols() != g.mean.cols())
    throw std::invalid_argument("sample_batch: eps shape mismatch");
  return (g.mean.array() + (g.log_var.array() * 0.5).exp() * eps.array())
      .matrix();
}

void sample_batch_backward(const GaussianBatch& g, const Eigen::MatrixXd& eps,
                           const Eigen::MatrixXd& d_z, Eigen::MatrixXd& d_mean,
                           Eigen::MatrixXd& d_log_var) {
  d_mean += d_z;
  d_log_var +=
      (d_z.array() * eps.array() * (g.log_var.array() * 0.5).exp() * 0.5)
          .matrix();
}

}  // namespace bpvae
