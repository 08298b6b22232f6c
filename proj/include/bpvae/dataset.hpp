// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BPVAE_DATASET_HPP
#define BPVAE_DATASET_HPP

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bpvae/features.hpp"
#include "bpvae/mixing.hpp"
#include "bpvae/stft.hpp"

namespace bpvae {

/// Line-delimited JSON mixture manifest
/// ({speech_ref, noise_ref, snr_db, seed, split} per line).
std::vector<MixtureSpec> read_manifest(const std::string& path);
void write_manifest(const std::string& path,
                    const std::vector<MixtureSpec>& entries);

/// Reads both source files and realizes the mixture deterministically.
MixResult load_mixture(const MixtureSpec& spec);

/// Aligned per-frame LPS features for a manifest: column j of each matrix
/// comes from the same time frame of the same mixture. spans[i] is the
/// (first column, frame count) of manifest entry i.
struct FrameTriples {
  Eigen::MatrixXd noisy;   // [F x total]
  Eigen::MatrixXd speech;  // [F x total]
  Eigen::MatrixXd noise;   // [F x total]
  std::vector<std::pair<Eigen::Index, Eigen::Index>> spans;

  Eigen::Index num_frames() const { return noisy.cols(); }
};

FrameTriples load_frame_triples(const std::vector<MixtureSpec>& entries,
                                int frame_len = kDefaultFrameLen,
                                int hop_len = kDefaultHopLen,
                                double lps_floor = kDefaultPowerFloor);

}  // namespace bpvae

#endif  // BPVAE_DATASET_HPP
