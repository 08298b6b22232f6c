// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bpvae/enhancement.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "bpvae/features.hpp"
#include "bpvae/losses.hpp"
#include "bpvae/mixing.hpp"

namespace bpvae {

namespace {

void check_mask_cfg(const EnhancementConfig& cfg) {
  if (!(cfg.mask_floor >= 0.0 && cfg.mask_floor <= 1.0))
    throw std::invalid_argument("mask_floor must lie in [0, 1]");
  if (!(cfg.mask_exponent > 0.0))
    throw std::invalid_argument("mask_exponent must be > 0");
}

// (p_x/(p_x+p_d))^e computed as sigmoid(lps_x - lps_d)^e, which cannot
// overflow for finite LPS values.
Eigen::ArrayXXd raw_mask(const Eigen::ArrayXXd& lps_x,
                         const Eigen::ArrayXXd& lps_d, double exponent) {
  return (1.0 / (1.0 + (lps_d - lps_x).exp())).pow(exponent);
}

void record_latents(EnhanceDiagnostics& diag, const Eigen::MatrixXd& z_x,
                    const Eigen::MatrixXd& z_d) {
  diag.z_speech_mean_norm.resize(z_x.cols());
  diag.z_noise_mean_norm.resize(z_d.cols());
  for (Eigen::Index j = 0; j < z_x.cols(); j++) {
    diag.z_speech_mean_norm[j] = z_x.col(j).norm();
    diag.z_noise_mean_norm[j] = z_d.col(j).norm();
  }
}

Waveform resynthesize(const Spectrogram& noisy_spec,
                      const Eigen::MatrixXd& mask, Eigen::Index target_len,
                      int sample_rate, EnhanceDiagnostics& diag) {
  diag.frames = static_cast<int>(mask.cols());
  diag.mask_mean = mask.mean();
  diag.mask_min = mask.minCoeff();
  diag.mask_max = mask.maxCoeff();
  diag.frame_mask_mean.resize(mask.cols());
  for (Eigen::Index j = 0; j < mask.cols(); j++)
    diag.frame_mask_mean[j] = mask.col(j).mean();

  Waveform out = istft(apply_mask(noisy_spec, mask));
  out.sample_rate = sample_rate;
  if (out.size() < target_len) {
    const Eigen::Index old = out.size();
    out.samples.conservativeResize(target_len);
    out.samples.tail(target_len - old).setZero();
  } else if (out.size() > target_len) {
    Eigen::VectorXd trimmed = out.samples.head(target_len);
    out.samples = std::move(trimmed);
  }
  return out;
}

Eigen::MatrixXd pick_latent(const GaussianBatch& post,
                            const EnhancementConfig& cfg, Rng& rng) {
  if (cfg.latent_mode == EnhancementConfig::LatentMode::PosteriorMean)
    return post.mean;
  return sample_batch(post, rng.normal_matrix(post.dim(), post.batch()));
}

}  // namespace

Eigen::VectorXd estimate_mask(const Eigen::VectorXd& speech_lps_mean,
                              const Eigen::VectorXd& noise_lps_mean,
                              const EnhancementConfig& cfg) {
  return estimate_mask_frames(speech_lps_mean, noise_lps_mean, cfg).col(0);
}

Eigen::MatrixXd estimate_mask_frames(const Eigen::MatrixXd& speech_lps,
                                     const Eigen::MatrixXd& noise_lps,
                                     const EnhancementConfig& cfg) {
  check_mask_cfg(cfg);
  if (speech_lps.rows() != noise_lps.rows() ||
      speech_lps.cols() != noise_lps.cols())
    throw std::invalid_argument("estimate_mask: shape mismatch");
  if (!speech_lps.allFinite() || !noise_lps.allFinite())
    throw std::invalid_argument("estimate_mask: non-finite LPS estimates");
  return raw_mask(speech_lps.array(), noise_lps.array(), cfg.mask_exponent)
      .max(cfg.mask_floor)
      .min(1.0)
      .matrix();
}

std::string EnhanceDiagnostics::to_json() const {
  nlohmann::json j{{"frames", frames},
                   {"mask_mean", mask_mean},
                   {"mask_min", mask_min},
                   {"mask_max", mask_max},
                   {"silent_input", silent_input},
                   {"untrained_checkpoint", untrained_checkpoint},
                   {"frame_mask_mean", frame_mask_mean},
                   {"z_speech_mean_norm", z_speech_mean_norm},
                   {"z_noise_mean_norm", z_noise_mean_norm}};
  return j.dump(2);
}

EnhanceResult enhance(const Waveform& noisy, NsVaeModel& nsvae,
                      const CheckpointMeta& nsvae_meta, VaeModel& cvae,
                      VaeModel& nvae, const EnhancementConfig& cfg) {
  check_mask_cfg(cfg);
  const int L = nsvae.encoder().spec().latent_dim;
  const int F = nsvae.encoder().spec().input_bins;
  if (cvae.decoder().spec().latent_dim != L ||
      nvae.decoder().spec().latent_dim != L ||
      cvae.decoder().spec().out_dim != F || nvae.decoder().spec().out_dim != F)
    throw std::invalid_argument(
        "enhance: checkpoints disagree on latent/feature dimensions");

  EnhanceResult res;
  res.diagnostics.untrained_checkpoint = !nsvae_meta.trained;
  if (signal_power(noisy, PowerMeasure::FullUtterance) <= kSilencePower) {
    res.diagnostics.silent_input = true;
    res.enhanced = noisy;
    return res;
  }

  const Spectrogram spec = stft(noisy, cfg.frame_len, cfg.hop_len);
  const Eigen::MatrixXd y_norm =
      nsvae.input_stats.normalize(lps(spec).values);

  auto [py_x, py_d] = encode_chunked(nsvae, y_norm);
  Rng rng(cfg.seed);
  Rng rng_x = rng.fork("latent_x"), rng_d = rng.fork("latent_d");
  const Eigen::MatrixXd z_x = pick_latent(py_x, cfg, rng_x);
  const Eigen::MatrixXd z_d = pick_latent(py_d, cfg, rng_d);
  record_latents(res.diagnostics, z_x, z_d);

  const Eigen::MatrixXd speech_lps =
      cvae.input_stats.denormalize(decode_chunked(cvae, z_x).mean);
  const Eigen::MatrixXd noise_lps =
      nvae.input_stats.denormalize(decode_chunked(nvae, z_d).mean);
  const Eigen::MatrixXd mask = estimate_mask_frames(speech_lps, noise_lps, cfg);

  res.enhanced =
      resynthesize(spec, mask, noisy.size(), noisy.sample_rate, res.diagnostics);
  return res;
}

EnhanceResult enhance_oracle(const Waveform& speech, const Waveform& noise,
                             VaeModel& cvae, VaeModel& nvae,
                             const CheckpointMeta& cvae_meta,
                             const CheckpointMeta& nvae_meta,
                             const EnhancementConfig& cfg) {
  check_mask_cfg(cfg);
  if (speech.size() != noise.size())
    throw std::invalid_argument("enhance_oracle: misaligned source lengths");
  if (speech.sample_rate != noise.sample_rate)
    throw std::invalid_argument("enhance_oracle: sample-rate mismatch");

  Waveform noisy;
  noisy.sample_rate = speech.sample_rate;
  noisy.samples = speech.samples + noise.samples;

  EnhanceResult res;
  res.diagnostics.untrained_checkpoint = !cvae_meta.trained || !nvae_meta.trained;
  if (signal_power(noisy, PowerMeasure::FullUtterance) <= kSilencePower) {
    res.diagnostics.silent_input = true;
    res.enhanced = noisy;
    return res;
  }

  const Spectrogram spec = stft(noisy, cfg.frame_len, cfg.hop_len);
  const Eigen::MatrixXd x_lps =
      lps(stft(speech, cfg.frame_len, cfg.hop_len)).values;
  const Eigen::MatrixXd d_lps =
      lps(stft(noise, cfg.frame_len, cfg.hop_len)).values;

  const GaussianBatch px =
      encode_chunked(cvae, cvae.input_stats.normalize(x_lps));
  const GaussianBatch pd =
      encode_chunked(nvae, nvae.input_stats.normalize(d_lps));
  Rng rng(cfg.seed);
  Rng rng_x = rng.fork("latent_x"), rng_d = rng.fork("latent_d");
  const Eigen::MatrixXd z_x = pick_latent(px, cfg, rng_x);
  const Eigen::MatrixXd z_d = pick_latent(pd, cfg, rng_d);
  record_latents(res.diagnostics, z_x, z_d);

  const Eigen::MatrixXd speech_lps =
      cvae.input_stats.denormalize(decode_chunked(cvae, z_x).mean);
  const Eigen::MatrixXd noise_lps =
      nvae.input_stats.denormalize(decode_chunked(nvae, z_d).mean);
  const Eigen::MatrixXd mask = estimate_mask_frames(speech_lps, noise_lps, cfg);

  res.enhanced =
      resynthesize(spec, mask, noisy.size(), noisy.sample_rate, res.diagnostics);
  return res;
}

}  // namespace bpvae
