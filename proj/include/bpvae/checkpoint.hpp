// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BPVAE_CHECKPOINT_HPP
#define BPVAE_CHECKPOINT_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bpvae/networks.hpp"

namespace bpvae {

inline constexpr int kCheckpointSchemaVersion = 1;

/// Sidecar metadata saved as <path>.json next to the weight archive.
struct CheckpointMeta {
  int schema_version = kCheckpointSchemaVersion;
  std::string model;        // cvae | nvae | nsvae
  std::string gamma_label;  // nsvae only, e.g. "1" or "inf"
  double alpha = 1.0;
  double beta = 1.0;
  uint64_t seed = 0;
  std::string config_hash;
  bool trained = false;
};

/// Raw tensor archive: <path> holds named [rows x cols] double matrices.
void save_tensors(
    const std::string& path,
    const std::vector<std::pair<std::string, const Eigen::MatrixXd*>>& tensors);
std::map<std::string, Eigen::MatrixXd> load_tensors(const std::string& path);

void save_checkpoint(const std::string& path, VaeModel& model,
                     const CheckpointMeta& meta);
void save_checkpoint(const std::string& path, NsVaeModel& model,
                     const CheckpointMeta& meta);

struct LoadedVae {
  std::unique_ptr<VaeModel> model;
  CheckpointMeta meta;
};
struct LoadedNsVae {
  std::unique_ptr<NsVaeModel> model;
  CheckpointMeta meta;
};

LoadedVae load_vae_checkpoint(const std::string& path);
LoadedNsVae load_nsvae_checkpoint(const std::string& path);

/// Trainable-parameter count of the archive at `path` (sum of tensor sizes).
long checkpoint_param_count(const std::string& path);

}  // namespace bpvae

#endif  // BPVAE_CHECKPOINT_HPP
