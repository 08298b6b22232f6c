// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BPVAE_MIXING_HPP
#define BPVAE_MIXING_HPP

#include <cstdint>
#include <string>

#include "bpvae/types.hpp"

namespace bpvae {

/// One mixture job: which files, at what SNR, under which seed.
struct MixtureSpec {
  std::string speech_ref;
  std::string noise_ref;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
  std::string split;  // train | validation | test
};

/// Below this mean-square power a signal counts as silent.
inline constexpr double kSilencePower = 1e-15;

enum class PowerMeasure {
  FullUtterance,  // mean square over every sample
  ActiveSegments  // mean square over 32 ms frames within 40 dB of the loudest
};

struct MixResult {
  Waveform noisy;
  Waveform speech;        // speech after any joint anti-clip rescale
  Waveform scaled_noise;  // gain-adjusted noise segment, same rescale
  double noise_gain = 1.0;
  double rescale = 1.0;  // joint anti-clip factor (1.0 when nothing clipped)
  double realized_snr_db = 0.0;
};

/// Scales a seeded segment of `noise` so that the speech-to-noise power
/// ratio hits `snr_db`, then adds it to `speech`. Noise shorter than the
/// speech is rejected; longer noise contributes a seeded random contiguous
/// segment. Mixtures that would clip are jointly rescaled to peak 0.99.
/// Silent speech or noise is rejected.
MixResult mix_at_snr(const Waveform& speech, const Waveform& noise,
                     double snr_db, std::uint64_t seed,
                     PowerMeasure power = PowerMeasure::FullUtterance);

/// Mean-square power under the chosen measure.
double signal_power(const Waveform& w, PowerMeasure power);

}  // namespace bpvae

#endif  // BPVAE_MIXING_HPP
