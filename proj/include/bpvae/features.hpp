// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BPVAE_FEATURES_HPP
#define BPVAE_FEATURES_HPP

#include <Eigen/Core>

#include "bpvae/stft.hpp"

namespace bpvae {

inline constexpr double kDefaultPowerFloor = 1e-10;

/// Log-power-spectrum frames in nats, one column per frame ([F x N]).
struct LpsFrames {
  Eigen::MatrixXd values;

  Eigen::Index num_bins() const { return values.rows(); }
  Eigen::Index num_frames() const { return values.cols(); }
};

/// values(f, n) = ln(max(|bins(f, n)|^2, floor)). The floor keeps the map
/// total: digital silence lands at ln(floor) instead of -inf.
LpsFrames lps(const Spectrogram& s, double floor = kDefaultPowerFloor);

/// Per-bin normalization statistics, frozen at training time and stored
/// with each checkpoint.
struct FeatureStats {
  Eigen::VectorXd mean;  // [F]
  Eigen::VectorXd std;   // [F], floored away from zero

  /// Column-wise (x - mean) / std.
  Eigen::MatrixXd normalize(const Eigen::MatrixXd& frames) const;
  /// Column-wise mean + std * x.
  Eigen::MatrixXd denormalize(const Eigen::MatrixXd& frames) const;
};

/// Estimates per-bin mean/std over all columns of `frames`.
FeatureStats compute_feature_stats(const Eigen::MatrixXd& frames,
                                   double std_floor = 1e-4);

}  // namespace bpvae

#endif  // BPVAE_FEATURES_HPP
