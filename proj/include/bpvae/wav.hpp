// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BPVAE_WAV_HPP
#define BPVAE_WAV_HPP

#include <string>

#include "bpvae/types.hpp"

namespace bpvae {

/// Reads a mono WAV file (PCM16 or IEEE float32). Multichannel input and
/// unsupported encodings are rejected. 48 kHz input is resampled to 16 kHz;
/// 16 kHz passes through; any other rate is rejected.
Waveform read_wav(const std::string& path);

enum class WavEncoding { Float32, Pcm16 };

/// Writes a mono WAV file at the waveform's sample rate.
void write_wav(const std::string& path, const Waveform& w,
               WavEncoding enc = WavEncoding::Float32);

}  // namespace bpvae

#endif  // BPVAE_WAV_HPP
