// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bpvae/features.hpp"

#include <stdexcept>

namespace bpvae {

LpsFrames lps(const Spectrogram& s, double floor) {
  if (floor <= 0.0) throw std::invalid_argument("lps: floor must be positive");
  LpsFrames out;
  out.values = s.bins.array().abs2().max(floor).log().matrix();
  return out;
}

Eigen::MatrixXd FeatureStats::normalize(const Eigen::MatrixXd& frames) const {
  if (frames.rows() != mean.size())
    throw std::invalid_argument("feature stats: dimension mismatch");
  return (frames.colwise() - mean).array().colwise() / std.array();
}

Eigen::MatrixXd FeatureStats::denormalize(const Eigen::MatrixXd& frames) const {
  if (frames.rows() != mean.size())
    throw std::invalid_argument("feature stats: dimension mismatch");
  return (frames.array().colwise() * std.array()).matrix().colwise() + mean;
}

FeatureStats compute_feature_stats(const Eigen::MatrixXd& frames, double std_floor) {
  if (frames.cols() < 1)
    throw std::invalid_argument("feature stats: need at least one frame");
  FeatureStats st;
  st.mean = frames.rowwise().mean();
  const Eigen::MatrixXd centered = frames.colwise() - st.mean;
  st.std = (centered.array().square().rowwise().mean())
               .sqrt()
               .max(std_floor)
               .matrix();
  return st;
}

}  // namespace bpvae
