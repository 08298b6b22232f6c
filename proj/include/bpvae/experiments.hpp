// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BPVAE_EXPERIMENTS_HPP
#define BPVAE_EXPERIMENTS_HPP

#include <optional>
#include <string>
#include <vector>

#include "bpvae/dataset.hpp"
#include "bpvae/enhancement.hpp"
#include "bpvae/metrics.hpp"
#include "bpvae/training.hpp"

namespace bpvae {

struct DatasetBuildConfig {
  std::string speech_dir;
  std::string noise_dir;
  std::string out_dir;
  double train_frac = 0.7;
  double val_frac = 0.2;  // remainder is test
  double snr_min = -10.0;
  double snr_max = 15.0;
  int mixes_per_utterance = 1;
  std::uint64_t seed = 0;
};

struct DatasetManifests {
  std::string train_path, val_path, test_path;
  std::vector<MixtureSpec> train, val, test;
};

/// Speaker-disjoint 70/20/10 split (by the filename prefix before '_'),
/// noise files likewise disjoint across splits, SNRs uniform in range,
/// deterministic under seed. Rejects fewer than 3 speakers.
DatasetManifests build_dataset(const DatasetBuildConfig& cfg);

struct SweepSpec {
  std::vector<std::string> gammas{"1", "2", "5", "10", "100", "1000", "inf"};
  std::uint64_t seed = 0;
  std::string train_manifest, val_manifest, test_manifest;
  std::string cvae_ckpt, nvae_ckpt;
  std::string out_dir;
  TrainConfig base;  // shared NS-VAE training settings (stage fields ignored)
  EnhancementConfig enhancement;
};

struct KlDiagRecord {
  std::string gamma;
  double mean_kl_speech = 0.0;
  double mean_kl_noise = 0.0;
};

struct SweepRow {
  std::string method;       // Noisy | gamma=<r> | Oracle
  std::string gamma_label;  // empty for Noisy/Oracle
  MetricAggregate si_sdr;
  MetricAggregate stoi;
  std::optional<MetricAggregate> pesq;
  KlDiagRecord kl;          // gamma rows only
  long trainable_params = 0;
  std::string checkpoint;
  bool failed = false;
  std::string error;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::string out_dir;
};

/// Trains one NS-VAE per gamma over shared teachers/data/seed, evaluates on
/// the test manifest, runs the KL diagnostic on validation, and emits the
/// report files. Failed runs are recorded and the sweep continues.
SweepReport run_gamma_sweep(const SweepSpec& spec);

/// Fig. 3 quantity: validation-average KL(p(z|y) || p(z|clean)) per head.
KlDiagRecord kl_diagnostic(NsVaeModel& nsvae, VaeModel& cvae, VaeModel& nvae,
                           const std::vector<MixtureSpec>& validation,
                           int frame_len = kDefaultFrameLen,
                           int hop_len = kDefaultHopLen,
                           double lps_floor = kDefaultPowerFloor);

/// Evaluation-pairs manifest: JSONL {utterance_id, reference, estimate}.
std::vector<EvalRecord> evaluate_pairs(const std::string& pairs_manifest);

}  // namespace bpvae

#endif  // BPVAE_EXPERIMENTS_HPP
