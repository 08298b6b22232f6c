// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bpvae/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include "bpvae/mixing.hpp"

namespace bpvae {

double si_sdr(const Waveform& reference, const Waveform& estimate,
              const SiSdrOptions& opts) {
  if (reference.size() != estimate.size())
    throw std::invalid_argument("si_sdr: length mismatch");
  if (reference.size() == 0) throw std::invalid_argument("si_sdr: empty input");

  Eigen::VectorXd r = reference.samples;
  Eigen::VectorXd e = estimate.samples;
  if (opts.zero_mean) {
    r.array() -= r.mean();
    e.array() -= e.mean();
  }
  const double r_energy = r.squaredNorm();
  if (r_energy / static_cast<double>(r.size()) <= kSilencePower)
    throw std::invalid_argument("si_sdr: silent reference");

  const double scale = r.dot(e) / r_energy;
  const Eigen::VectorXd target = scale * r;
  const double num = target.squaredNorm();
  const double den = (e - target).squaredNorm();
  if (den <= 0.0) return opts.cap_db;
  if (num <= 0.0) return -opts.cap_db;
  const double db = 10.0 * std::log10(num / den);
  return std::clamp(db, -opts.cap_db, opts.cap_db);
}

MetricAggregate aggregate(const std::vector<double>& values) {
  if (values.size() < 2)
    throw std::invalid_argument("aggregate: need at least 2 records");
  MetricAggregate out;
  out.n = static_cast<long>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(out.n);
  double sq = 0.0;
  for (double v : values) sq += (v - out.mean) * (v - out.mean);
  const double sd = std::sqrt(sq / static_cast<double>(out.n));
  out.ci95 = 1.96 * sd / std::sqrt(static_cast<double>(out.n));
  return out;
}

bool pesq_available() {
  const char* bin = std::getenv(kPesqEnv);
  return bin != nullptr && bin[0] != '\0';
}

std::optional<double> pesq_external(const std::string& ref_wav_path,
                                    const std::string& deg_wav_path,
                                    int sample_rate) {
  const char* bin = std::getenv(kPesqEnv);
  if (bin == nullptr || bin[0] == '\0') return std::nullopt;

  std::ostringstream cmd;
  cmd << '"' << bin << "\" \"" << ref_wav_path << "\" \"" << deg_wav_path
      << "\" " << sample_rate << " 2>/dev/null";
  FILE* pipe = popen(cmd.str().c_str(), "r");
  if (pipe == nullptr) return std::nullopt;

  std::string output;
  char buf[256];
  while (fgets(buf, sizeof buf, pipe) != nullptr) output += buf;
  const int status = pclose(pipe);
  if (status != 0) return std::nullopt;

  // Last whitespace-separated token of the last non-empty line.
  std::istringstream lines(output);
  std::string line, last_token;
  while (std::getline(lines, line)) {
    std::istringstream toks(line);
    std::string tok;
    while (toks >> tok) last_token = tok;
  }
  if (last_token.empty()) return std::nullopt;
  try {
    size_t used = 0;
    const double score = std::stod(last_token, &used);
    if (used != last_token.size() || !std::isfinite(score)) return std::nullopt;
    return score;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace bpvae
