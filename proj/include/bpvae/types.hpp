// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BPVAE_TYPES_HPP
#define BPVAE_TYPES_HPP

#include <Eigen/Core>

namespace bpvae {

inline constexpr int kModelSampleRate = 16000;

/// Mono audio, nominal amplitude range [-1, 1].
struct Waveform {
  Eigen::VectorXd samples;
  int sample_rate = kModelSampleRate;

  Eigen::Index size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
  bool all_finite() const { return samples.allFinite(); }
};

}  // namespace bpvae

#endif  // BPVAE_TYPES_HPP
