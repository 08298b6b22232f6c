// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BPVAE_ENHANCEMENT_HPP
#define BPVAE_ENHANCEMENT_HPP

#include <string>
#include <vector>

#include <Eigen/Core>

#include "bpvae/checkpoint.hpp"
#include "bpvae/stft.hpp"
#include "bpvae/types.hpp"

namespace bpvae {

struct EnhancementConfig {
  enum class LatentMode { PosteriorMean, Sampled };

  LatentMode latent_mode = LatentMode::PosteriorMean;
  double mask_exponent = 0.5;
  // mask_floor = 1 degenerates to the all-ones mask (identity path).
  double mask_floor = 0.0;
  bool oracle = false;
  std::uint64_t seed = 0;
  int frame_len = kDefaultFrameLen;
  int hop_len = kDefaultHopLen;
};

/// clamp((p_x / (p_x + p_d))^mask_exponent, mask_floor, 1) per bin, with
/// p_* = exp(lps mean). Total by construction.
Eigen::VectorXd estimate_mask(const Eigen::VectorXd& speech_lps_mean,
                              const Eigen::VectorXd& noise_lps_mean,
                              const EnhancementConfig& cfg);
/// Column-wise batch form over [F x N] LPS means.
Eigen::MatrixXd estimate_mask_frames(const Eigen::MatrixXd& speech_lps,
                                     const Eigen::MatrixXd& noise_lps,
                                     const EnhancementConfig& cfg);

struct EnhanceDiagnostics {
  int frames = 0;
  double mask_mean = 0.0;
  double mask_min = 1.0;
  double mask_max = 0.0;
  bool silent_input = false;
  bool untrained_checkpoint = false;
  // Per-frame summaries (frame-mean mask, latent posterior mean norms).
  std::vector<double> frame_mask_mean;
  std::vector<double> z_speech_mean_norm;
  std::vector<double> z_noise_mean_norm;

  std::string to_json() const;
};

struct EnhanceResult {
  Waveform enhanced;
  EnhanceDiagnostics diagnostics;
};

/// NS-VAE latents through the frozen teacher decoders, ratio mask on the
/// noisy spectrogram, resynthesis with the noisy phase.
EnhanceResult enhance(const Waveform& noisy, NsVaeModel& nsvae,
                      const CheckpointMeta& nsvae_meta, VaeModel& cvae,
                      VaeModel& nvae, const EnhancementConfig& cfg);

/// Oracle mode of Table 1: latents from the teacher ENCODERS applied to the
/// aligned clean speech and noise; the mixture is speech + noise.
EnhanceResult enhance_oracle(const Waveform& speech, const Waveform& noise,
                             VaeModel& cvae, VaeModel& nvae,
                             const CheckpointMeta& cvae_meta,
                             const CheckpointMeta& nvae_meta,
                             const EnhancementConfig& cfg);

}  // namespace bpvae

#endif  // BPVAE_ENHANCEMENT_HPP
