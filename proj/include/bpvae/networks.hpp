// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BPVAE_NETWORKS_HPP
#define BPVAE_NETWORKS_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bpvae/features.hpp"
#include "bpvae/gaussian.hpp"
#include "bpvae/nn.hpp"
#include "bpvae/rng.hpp"

namespace bpvae {

/// Encoder architecture: conv trunk over frequency, FC heads.
/// num_heads is 2 for C-VAE/N-VAE (mean, log_var) and 4 for NS-VAE
/// (mean/log_var for z_x, then for z_d).
struct EncoderSpec {
  std::vector<int> conv_channels{32, 64, 128, 256};
  int kernel = 3;
  int latent_dim = 128;
  int num_heads = 2;
  int input_bins = 257;
};

/// Decoder architecture: FC projection into the conv domain, conv trunk,
/// FC heads emitting per-bin mean and log-variance of an LPS frame.
struct DecoderSpec {
  std::vector<int> conv_channels{256, 128, 64, 32};
  int kernel = 3;
  int out_dim = 257;
  int num_heads = 2;
  int latent_dim = 128;
};

/// Exact trainable-parameter counts walked from the layer shapes.
long param_count(const EncoderSpec& spec);
long param_count(const DecoderSpec& spec);

/// Gaussian heads need two stabilizers or the exp(-log_var) factor in the
/// likelihood blows up within the first optimizer steps: log-variance
/// outputs are squashed smoothly into (-kLogVarBound, kLogVarBound)
/// (identity-like near zero), and head weights start kHeadInitScale times
/// smaller than the trunk so both distributions open near N(0, I).
inline constexpr double kLogVarBound = 10.0;
inline constexpr double kHeadInitScale = 0.1;

inline Eigen::MatrixXd squash_log_var(const Eigen::MatrixXd& raw) {
  return kLogVarBound * (raw / kLogVarBound).array().tanh();
}
/// Chain-rule factor from the squashed value: d(squash)/d(raw) = 1 - (s/B)^2.
inline Eigen::MatrixXd squash_log_var_backward(const Eigen::MatrixXd& grad,
                                               const Eigen::MatrixXd& squashed) {
  return grad.array() * (1.0 - (squashed.array() / kLogVarBound).square());
}

/// Batched diagonal Gaussians: one distribution per column.
struct GaussianBatch {
  Eigen::MatrixXd mean;     // [L x B]
  Eigen::MatrixXd log_var;  // [L x B]

  Eigen::Index dim() const { return mean.rows(); }
  Eigen::Index batch() const { return mean.cols(); }
  DiagonalGaussian column(Eigen::Index j) const {
    return DiagonalGaussian(mean.col(j), log_var.col(j));
  }
};

class Encoder {
 public:
  Encoder(EncoderSpec spec, Rng& rng, const std::string& name);

  /// x: [input_bins x B] -> one [latent_dim x B] matrix per head.
  std::vector<Eigen::MatrixXd> forward(const Eigen::MatrixXd& x);
  /// One gradient matrix per head; returns gradient w.r.t. the input.
  Eigen::MatrixXd backward(const std::vector<Eigen::MatrixXd>& head_grads);

  std::vector<nn::Tensor*> params();
  const EncoderSpec& spec() const { return spec_; }

 private:
  EncoderSpec spec_;
  nn::Sequential trunk_;
  std::vector<std::unique_ptr<nn::Dense>> heads_;
};

class Decoder {
 public:
  Decoder(DecoderSpec spec, Rng& rng, const std::string& name);

  /// z: [latent_dim x B] -> (mean, log_var) each [out_dim x B].
  GaussianBatch forward(const Eigen::MatrixXd& z);
  Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_mean,
                           const Eigen::MatrixXd& grad_log_var);

  std::vector<nn::Tensor*> params();
  const DecoderSpec& spec() const { return spec_; }

 private:
  DecoderSpec spec_;
  nn::Sequential trunk_;  // input projection + convs
  std::vector<std::unique_ptr<nn::Dense>> heads_;
  Eigen::MatrixXd log_var_cache_;  // squashed, for the backward chain
};

/// C-VAE / N-VAE: one encoder (2 heads) + one decoder.
class VaeModel {
 public:
  VaeModel(EncoderSpec enc_spec, DecoderSpec dec_spec, uint64_t seed,
           const std::string& name);

  GaussianBatch encode(const Eigen::MatrixXd& x);
  void encode_backward(const Eigen::MatrixXd& grad_mean,
                       const Eigen::MatrixXd& grad_log_var);
  GaussianBatch decode(const Eigen::MatrixXd& z);
  /// Returns gradient w.r.t. z.
  Eigen::MatrixXd decode_backward(const Eigen::MatrixXd& grad_mean,
                                  const Eigen::MatrixXd& grad_log_var);

  std::vector<nn::Tensor*> params();
  long param_count_total() const;
  Encoder& encoder() { return enc_; }
  Decoder& decoder() { return dec_; }
  const std::string& name() const { return name_; }

  FeatureStats input_stats;  // training-split LPS normalization

 private:
  std::string name_;
  Encoder enc_;
  Decoder dec_;
  Eigen::MatrixXd enc_log_var_cache_;
};

/// NS-VAE: shared conv trunk, four heads; decoder present only in PVAE mode
/// (absent when trained with alpha = 0, Eq. (8) regime).
class NsVaeModel {
 public:
  NsVaeModel(EncoderSpec enc_spec, std::optional<DecoderSpec> dec_spec,
             uint64_t seed, const std::string& name);

  /// Returns (speech posterior batch, noise posterior batch).
  std::pair<GaussianBatch, GaussianBatch> encode(const Eigen::MatrixXd& y);
  void encode_backward(const GaussianBatch& grad_speech,
                       const GaussianBatch& grad_noise);
  bool has_decoder() const { return dec_.has_value(); }
  /// z: concatenated [2*latent_dim x B].
  GaussianBatch decode(const Eigen::MatrixXd& z);
  Eigen::MatrixXd decode_backward(const Eigen::MatrixXd& grad_mean,
                                  const Eigen::MatrixXd& grad_log_var);

  std::vector<nn::Tensor*> params();
  long param_count_total() const;
  Encoder& encoder() { return enc_; }
  Decoder& decoder();
  const std::string& name() const { return name_; }

  FeatureStats input_stats;

 private:
  std::string name_;
  Encoder enc_;
  std::optional<Decoder> dec_;
  Eigen::MatrixXd enc_log_var_x_cache_, enc_log_var_d_cache_;
};

/// Spec-facing adapter: per-frame distributions from a batch.
std::vector<DiagonalGaussian> to_gaussians(const GaussianBatch& batch);

/// Inference over arbitrarily many frames in bounded memory (the conv
/// im2col buffers grow with batch width).
GaussianBatch encode_chunked(VaeModel& model, const Eigen::MatrixXd& frames,
                             Eigen::Index chunk = 256);
std::pair<GaussianBatch, GaussianBatch> encode_chunked(
    NsVaeModel& model, const Eigen::MatrixXd& frames, Eigen::Index chunk = 256);
GaussianBatch decode_chunked(VaeModel& model, const Eigen::MatrixXd& z,
                             Eigen::Index chunk = 256);

}  // namespace bpvae

#endif  // BPVAE_NETWORKS_HPP
