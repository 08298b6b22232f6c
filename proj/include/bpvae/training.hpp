// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BPVAE_TRAINING_HPP
#define BPVAE_TRAINING_HPP

#include <string>
#include <vector>

#include "bpvae/checkpoint.hpp"
#include "bpvae/dataset.hpp"
#include "bpvae/losses.hpp"
#include "bpvae/networks.hpp"
#include "bpvae/nn.hpp"

namespace bpvae {

struct TrainConfig {
  std::string stage = "cvae";  // cvae | nvae | nsvae
  double alpha = 1.0;
  double beta = 1.0;
  std::string gamma_label = "1";  // nsvae: "r" or "inf"

  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  int batch_size = 128;
  int max_epochs = 100;
  int patience = 10;     // early-stopping epochs
  int lr_patience = 3;   // halve lr after this many non-improving epochs
  std::uint64_t seed = 0;

  std::vector<int> enc_channels{32, 64, 128, 256};
  std::vector<int> dec_channels{256, 128, 64, 32};
  int latent_dim = 128;
  int num_bins = 257;
  int frame_len = kDefaultFrameLen;
  int hop_len = kDefaultHopLen;
  double lps_floor = kDefaultPowerFloor;
  bool sampled_expectations = false;  // Eq. (6) ratio terms via 1-sample MC

  std::string out_dir = ".";
  std::string run_name;    // checkpoint/log base name; defaults to stage
  std::string cvae_ckpt;   // frozen teachers, nsvae stage only
  std::string nvae_ckpt;
  std::string init_ckpt;   // optional resume source
};

/// Applies a gamma label to (alpha, beta): "inf" -> (0, 1), numeric r ->
/// (1, r), matching the paper's sweep convention.
void apply_gamma(TrainConfig& cfg, const std::string& label);

/// Stable hash of the fields that affect training, stored in checkpoints.
std::string config_hash(const TrainConfig& cfg);

struct EpochStats {
  int epoch = 0;
  LossBreakdown train;
  LossBreakdown validation;
  double lr = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double best_val_total = 0.0;
  std::string checkpoint_path;
  std::string log_path;
  bool diverged = false;
};

TrainReport pretrain_clean_vae(const TrainConfig& cfg,
                               const std::vector<MixtureSpec>& train_manifest,
                               const std::vector<MixtureSpec>& val_manifest);
TrainReport pretrain_noise_vae(const TrainConfig& cfg,
                               const std::vector<MixtureSpec>& train_manifest,
                               const std::vector<MixtureSpec>& val_manifest);
TrainReport train_nsvae(const TrainConfig& cfg,
                        const std::vector<MixtureSpec>& train_manifest,
                        const std::vector<MixtureSpec>& val_manifest);

// ---- Step-level API (also drives the single-batch overfit checks).

/// One optimization step of beta * KL(q, N(0,I)) - log p(x|z) on a
/// normalized batch. update=false evaluates only (z at the posterior mean).
LossBreakdown vae_train_step(VaeModel& model, nn::Adam& opt,
                             const Eigen::MatrixXd& x_norm, double beta,
                             Rng& rng, bool update);

/// One optimization step of Eq. (6)/(7)/(8) against precomputed frozen
/// teacher posteriors aligned with the batch columns.
LossBreakdown nsvae_train_step(NsVaeModel& model, nn::Adam& opt,
                               const Eigen::MatrixXd& y_norm,
                               const GaussianBatch& x_teacher,
                               const GaussianBatch& d_teacher, double alpha,
                               double beta, bool sampled_expectations,
                               Rng& rng, bool update);

/// Objective evaluation with caller-supplied reparameterization noise, the
/// substrate of the finite-difference gradient checks. do_backward
/// accumulates parameter gradients without stepping an optimizer.
LossBreakdown vae_objective(VaeModel& model, const Eigen::MatrixXd& x_norm,
                            double beta, const Eigen::MatrixXd& eps,
                            bool do_backward);
LossBreakdown nsvae_objective(NsVaeModel& model, const Eigen::MatrixXd& y_norm,
                              const GaussianBatch& x_teacher,
                              const GaussianBatch& d_teacher, double alpha,
                              double beta, bool sampled_expectations,
                              const Eigen::MatrixXd* eps_x,
                              const Eigen::MatrixXd* eps_d,
                              const Eigen::MatrixXd* eps_ratio,
                              bool do_backward);

}  // namespace bpvae

#endif  // BPVAE_TRAINING_HPP
