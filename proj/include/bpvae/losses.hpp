// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BPVAE_LOSSES_HPP
#define BPVAE_LOSSES_HPP

#include <Eigen/Core>

#include "bpvae/gaussian.hpp"
#include "bpvae/networks.hpp"

namespace bpvae {

/// Itemized training objective. `total` is the reported loss value; the
/// expectation-ratio terms collapse algebraically against the KL terms
/// (KL(p,t) + CE(p,prior) - CE(p,t) == KL(p,prior) for any teacher t), so
/// the teacher supervision only steers training if those ratio terms are
/// treated as constants. `objective()` is the differentiable surface the
/// optimizer actually descends: the KL-to-teacher and reconstruction terms.
struct LossBreakdown {
  double total = 0.0;
  double kl_speech = 0.0;
  double kl_noise = 0.0;
  double latent_ratio_speech = 0.0;
  double latent_ratio_noise = 0.0;
  double reconstruction = 0.0;  // log-likelihood; total subtracts it
  double alpha = 1.0;
  double beta = 1.0;

  double objective() const {
    return beta * (kl_speech + kl_noise) - alpha * reconstruction;
  }
};

/// Generic (beta-)VAE loss, Eqs. (2)-(5):
/// total = beta * kl(posterior, prior) - log_pdf(likelihood, target).
LossBreakdown vae_loss(const DiagonalGaussian& posterior,
                       const DiagonalGaussian& prior,
                       const DiagonalGaussian& likelihood,
                       const Eigen::VectorXd& target, double beta);

/// PVAE loss, Eq. (6): latent KL + expectation-ratio terms for both heads
/// plus the noisy reconstruction term.
LossBreakdown pvae_loss(const DiagonalGaussian& y_post_x,
                        const DiagonalGaussian& y_post_d,
                        const DiagonalGaussian& x_post,
                        const DiagonalGaussian& d_post,
                        const DiagonalGaussian& prior,
                        const DiagonalGaussian& y_likelihood,
                        const Eigen::VectorXd& y_target);

/// Weighted beta-PVAE loss, Eq. (7):
/// total = beta * (latent terms of Eq. 6) - alpha * reconstruction.
LossBreakdown beta_pvae_loss(const DiagonalGaussian& y_post_x,
                             const DiagonalGaussian& y_post_d,
                             const DiagonalGaussian& x_post,
                             const DiagonalGaussian& d_post,
                             const DiagonalGaussian& prior,
                             const DiagonalGaussian& y_likelihood,
                             const Eigen::VectorXd& y_target, double alpha,
                             double beta);

/// Decoder-free loss, Eq. (8); never evaluates a decoder.
LossBreakdown latent_only_loss(const DiagonalGaussian& y_post_x,
                               const DiagonalGaussian& y_post_d,
                               const DiagonalGaussian& x_post,
                               const DiagonalGaussian& d_post,
                               const DiagonalGaussian& prior, double beta);

// ---- Batched building blocks for training (values averaged over columns,
// ---- gradients w.r.t. the first argument's parameters).

struct BatchTermGrad {
  double value = 0.0;
  Eigen::MatrixXd d_mean;
  Eigen::MatrixXd d_log_var;
};

/// Mean over columns of KL(p_j || q_j); q is a constant (frozen teacher).
BatchTermGrad kl_mean_grad(const GaussianBatch& p, const GaussianBatch& q);
/// Same against a single broadcast prior.
BatchTermGrad kl_mean_grad(const GaussianBatch& p, const DiagonalGaussian& prior);

/// Mean over columns of log_pdf(likelihood_j, target_j); gradients w.r.t.
/// the likelihood parameters.
BatchTermGrad log_pdf_mean_grad(const GaussianBatch& likelihood,
                                const Eigen::MatrixXd& target);

/// Mean over columns of E_{z~p}[log teacher(z) - log prior(z)], i.e.
/// cross_entropy(p, prior) - cross_entropy(p, teacher). Analytic by
/// default; with eps columns supplied, single-sample Monte Carlo instead.
/// Value only — treated as a constant during optimization (see
/// LossBreakdown).
double ratio_mean(const GaussianBatch& p, const GaussianBatch& teacher,
                  const DiagonalGaussian& prior,
                  const Eigen::MatrixXd* sample_eps = nullptr);

/// Reparameterized batch draw z = mean + exp(log_var/2) .* eps.
Eigen::MatrixXd sample_batch(const GaussianBatch& g, const Eigen::MatrixXd& eps);
/// Pullback of sample_batch: accumulates into head-parameter gradients.
void sample_batch_backward(const GaussianBatch& g, const Eigen::MatrixXd& eps,
                           const Eigen::MatrixXd& d_z, Eigen::MatrixXd& d_mean,
                           Eigen::MatrixXd& d_log_var);

}  // namespace bpvae

#endif  // BPVAE_LOSSES_HPP
