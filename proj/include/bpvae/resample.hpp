// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BPVAE_RESAMPLE_HPP
#define BPVAE_RESAMPLE_HPP

#include <Eigen/Core>

#include "bpvae/types.hpp"

namespace bpvae {

/// Polyphase rational-rate resampling by up/down (both >= 1).
/// Anti-alias filter: Blackman-windowed sinc, 10 zero crossings per side at
/// the lower of the two rates, cutoff at the lower Nyquist.
/// Output length is ceil(n * up / down).
Eigen::VectorXd resample_poly(const Eigen::VectorXd& x, int up, int down);

/// Same, carrying the sample-rate bookkeeping.
Waveform resample_poly(const Waveform& w, int up, int down);

}  // namespace bpvae

#endif  // BPVAE_RESAMPLE_HPP
