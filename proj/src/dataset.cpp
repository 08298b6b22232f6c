// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bpvae/dataset.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "bpvae/features.hpp"
#include "bpvae/wav.hpp"

namespace bpvae {

namespace {
using nlohmann::json;
}

std::vector<MixtureSpec> read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open manifest: " + path);
  std::vector<MixtureSpec> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    lineno++;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": bad manifest record: " + e.what());
    }
    MixtureSpec spec;
    spec.speech_ref = j.at("speech_ref").get<std::string>();
    spec.noise_ref = j.at("noise_ref").get<std::string>();
    spec.snr_db = j.at("snr_db").get<double>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.split = j.value("split", std::string{});
    out.push_back(std::move(spec));
  }
  return out;
}

void write_manifest(const std::string& path,
                    const std::vector<MixtureSpec>& entries) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write manifest: " + path);
  for (const auto& e : entries) {
    json j{{"speech_ref", e.speech_ref},
           {"noise_ref", e.noise_ref},
           {"snr_db", e.snr_db},
           {"seed", e.seed},
           {"split", e.split}};
    os << j.dump() << "\n";
  }
}

MixResult load_mixture(const MixtureSpec& spec) {
  const Waveform speech = read_wav(spec.speech_ref);
  const Waveform noise = read_wav(spec.noise_ref);
  return mix_at_snr(speech, noise, spec.snr_db, spec.seed);
}

FrameTriples load_frame_triples(const std::vector<MixtureSpec>& entries,
                                int frame_len, int hop_len, double lps_floor) {
  if (entries.empty()) throw std::invalid_argument("load_frame_triples: empty manifest");
  std::vector<Eigen::MatrixXd> noisy, speech, noise;
  Eigen::Index total = 0;
  FrameTriples out;
  out.spans.reserve(entries.size());
  for (const auto& e : entries) {
    const MixResult mix = load_mixture(e);
    Eigen::MatrixXd y = lps(stft(mix.noisy, frame_len, hop_len), lps_floor).values;
    Eigen::MatrixXd x = lps(stft(mix.speech, frame_len, hop_len), lps_floor).values;
    Eigen::MatrixXd d =
        lps(stft(mix.scaled_noise, frame_len, hop_len), lps_floor).values;
    out.spans.emplace_back(total, y.cols());
    total += y.cols();
    noisy.push_back(std::move(y));
    speech.push_back(std::move(x));
    noise.push_back(std::move(d));
  }
  const Eigen::Index bins = noisy.front().rows();
  out.noisy.resize(bins, total);
  out.speech.resize(bins, total);
  out.noise.resize(bins, total);
  Eigen::Index at = 0;
  for (size_t i = 0; i < noisy.size(); i++) {
    const Eigen::Index n = noisy[i].cols();
    out.noisy.middleCols(at, n) = noisy[i];
    out.speech.middleCols(at, n) = speech[i];
    out.noise.middleCols(at, n) = noise[i];
    at += n;
  }
  return out;
}

}  // namespace bpvae
