// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bpvae/mixing.hpp"

#include <cmath>
#include <stdexcept>

#include "bpvae/rng.hpp"

namespace bpvae {

namespace {
}

double signal_power(const Waveform& w, PowerMeasure power) {
  if (w.samples.size() == 0) return 0.0;
  if (power == PowerMeasure::FullUtterance)
    return w.samples.squaredNorm() / static_cast<double>(w.samples.size());

  // active-segment measure: 32 ms frames, keep those within 40 dB of the peak
  const Eigen::Index frame = w.sample_rate * 32 / 1000;
  const Eigen::Index n = w.samples.size();
  if (n < frame) return signal_power(w, PowerMeasure::FullUtterance);
  std::vector<double> energies;
  for (Eigen::Index start = 0; start + frame <= n; start += frame)
    energies.push_back(w.samples.segment(start, frame).squaredNorm() /
                       static_cast<double>(frame));
  double peak = 0.0;
  for (const double e : energies) peak = std::max(peak, e);
  if (peak <= 0.0) return 0.0;
  double sum = 0.0;
  Eigen::Index count = 0;
  for (const double e : energies) {
    if (e >= peak * 1e-4) {
      sum += e;
      ++count;
    }
  }
  return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

MixResult mix_at_snr(const Waveform& speech, const Waveform& noise,
                     double snr_db, std::uint64_t seed, PowerMeasure power) {
  if (speech.sample_rate != kModelSampleRate || noise.sample_rate != kModelSampleRate)
    throw std::invalid_argument("mix: both inputs must be 16 kHz");
  const Eigen::Index n = speech.samples.size();
  if (noise.samples.size() < n)
    throw std::invalid_argument("mix: noise must be at least as long as speech");

  Waveform segment;
  segment.sample_rate = kModelSampleRate;
  if (noise.samples.size() == n) {
    segment.samples = noise.samples;
  } else {
    Rng rng(seed);
    const auto offset = static_cast<Eigen::Index>(
        rng.uniform_index(static_cast<std::uint64_t>(noise.samples.size() - n + 1)));
    segment.samples = noise.samples.segment(offset, n);
  }

  const double p_speech = signal_power(speech, power);
  const double p_noise = signal_power(segment, power);
  if (p_speech <= kSilencePower)
    throw std::invalid_argument("mix: speech is silent");
  if (p_noise <= kSilencePower)
    throw std::invalid_argument("mix: noise segment is silent");

  const double gain = std::sqrt(p_speech / (p_noise * std::pow(10.0, snr_db / 10.0)));

  MixResult r;
  r.noise_gain = gain;
  r.speech = speech;
  r.scaled_noise.sample_rate = kModelSampleRate;
  r.scaled_noise.samples = gain * segment.samples;
  r.noisy.sample_rate = kModelSampleRate;
  r.noisy.samples = speech.samples + r.scaled_noise.samples;

  const double peak = r.noisy.samples.cwiseAbs().maxCoeff();
  if (peak > 1.0) {
    r.rescale = 0.99 / peak;
    r.noisy.samples *= r.rescale;
    r.speech.samples *= r.rescale;
    r.scaled_noise.samples *= r.rescale;
  }

  r.realized_snr_db =
      10.0 * std::log10(signal_power(r.speech, power) /
                        signal_power(r.scaled_noise, power));
  return r;
}

}  // namespace bpvae
