// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BPVAE_STOI_HPP
#define BPVAE_STOI_HPP

#include "bpvae/types.hpp"

namespace bpvae {

/// Short-time objective intelligibility (the classic, non-extended
/// measure): signals are brought to 10 kHz, silent frames are removed by a
/// 40 dB energy gate on the reference, one-third-octave band envelopes are
/// compared by correlation over 384 ms segments. Returns a value in [0, 1].
/// Rejects inputs too short for a single analysis segment.
double stoi(const Waveform& reference, const Waveform& estimate);

}  // namespace bpvae

#endif  // BPVAE_STOI_HPP
