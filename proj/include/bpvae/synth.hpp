// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BPVAE_SYNTH_HPP
#define BPVAE_SYNTH_HPP

#include <string>
#include <vector>

#include "bpvae/rng.hpp"
#include "bpvae/types.hpp"

namespace bpvae {

/// Formant/pitch profile shared by all utterances of one synthetic speaker.
struct SpeakerProfile {
  double f0_base = 120.0;
  double formants[3] = {500.0, 1500.0, 2700.0};
  double bandwidths[3] = {90.0, 120.0, 160.0};

  static SpeakerProfile draw(Rng& rng);
};

/// Harmonic stack under a formant envelope with syllabic modulation and a
/// breath-noise floor; enough spectral structure for the VAEs to model.
Waveform synth_speech_like(double seconds, int sample_rate,
                           const SpeakerProfile& speaker, Rng& rng);

/// Colored noise family; `kind` cycles through white / pink / rumble /
/// hum-with-harmonics / modulated band noise.
Waveform synth_noise(double seconds, int sample_rate, int kind, Rng& rng);
inline constexpr int kNoiseKinds = 5;
const char* noise_kind_name(int kind);

struct SynthCorpusConfig {
  int num_speakers = 10;
  int utterances_per_speaker = 6;
  int num_noise_files = 15;
  double utt_seconds_min = 1.2;
  double utt_seconds_max = 2.0;
  double noise_seconds = 6.0;
  int sample_rate = 16000;
  std::uint64_t seed = 0;
};

struct SynthCorpus {
  std::vector<std::string> speech_files;
  std::vector<std::string> noise_files;
};

/// Writes <root>/speech/spkNN_uttMM.wav and <root>/noise/<kind>_MM.wav.
/// Speaker identity is recoverable from the filename prefix before '_'.
SynthCorpus generate_corpus(const std::string& root,
                            const SynthCorpusConfig& cfg);

}  // namespace bpvae

#endif  // BPVAE_SYNTH_HPP
