// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BPVAE_METRICS_HPP
#define BPVAE_METRICS_HPP

#include <optional>
#include <string>
#include <vector>

#include "bpvae/types.hpp"

namespace bpvae {

struct SiSdrOptions {
  // The [1,0]/[1,1] -> 0 dB reference case fixes the convention: raw
  // signals, no mean removal. The cited SI-SDR definition subtracts means
  // first; flip this on to follow it.
  bool zero_mean = false;
  double cap_db = 60.0;
};

/// Scale-invariant SDR in dB: project the estimate onto the reference and
/// compare target and residual energies. Capped at +/- cap_db. SI-SDR is
/// NOT shift-invariant; do not use it as a plain SNR.
double si_sdr(const Waveform& reference, const Waveform& estimate,
              const SiSdrOptions& opts = {});

struct EvalRecord {
  std::string utterance_id;
  double si_sdr_db = 0.0;
  double stoi = 0.0;  // [0, 1]; reports render x100
  std::optional<double> pesq;
};

struct MetricAggregate {
  double mean = 0.0;
  double ci95 = 0.0;  // 1.96 * sd / sqrt(n) half-width
  long n = 0;
};

/// Normal-approximation aggregate; requires at least 2 values.
MetricAggregate aggregate(const std::vector<double>& values);

inline constexpr const char* kPesqEnv = "BPVAE_PESQ_BIN";

/// External-tool PESQ adapter. When the environment variable names a
/// binary, it is invoked as `<bin> <ref.wav> <deg.wav> <sample_rate>` and
/// must print the score as the last whitespace-separated token of its last
/// non-empty output line. Unconfigured or failing runs yield nullopt and
/// the PESQ column is reported as n/a.
bool pesq_available();
std::optional<double> pesq_external(const std::string& ref_wav_path,
                                    const std::string& deg_wav_path,
                                    int sample_rate);

}  // namespace bpvae

#endif  // BPVAE_METRICS_HPP
