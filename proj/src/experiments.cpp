// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bpvae/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "bpvae/report.hpp"
#include "bpvae/stoi.hpp"
#include "bpvae/wav.hpp"

namespace bpvae {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> list_wavs(const std::string& dir) {
  std::vector<std::string> out;
  if (!fs::is_directory(dir))
    throw std::runtime_error("not a directory: " + dir);
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".wav")
      out.push_back(entry.path().string());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw std::runtime_error("no .wav files in " + dir);
  return out;
}

std::string speaker_of(const std::string& path) {
  const std::string stem = fs::path(path).stem().string();
  const auto us = stem.find('_');
  return us == std::string::npos ? stem : stem.substr(0, us);
}

// Proportional split sizes, every bucket nonempty.
std::array<size_t, 3> split_sizes(size_t n, double train_frac, double val_frac) {
  auto n_train = static_cast<size_t>(std::lround(train_frac * n));
  auto n_val = static_cast<size_t>(std::lround(val_frac * n));
  n_train = std::max<size_t>(1, std::min(n_train, n - 2));
  n_val = std::max<size_t>(1, std::min(n_val, n - n_train - 1));
  return {n_train, n_val, n - n_train - n_val};
}

struct TestUtterance {
  std::string id;
  MixResult mix;
};

std::vector<TestUtterance> materialize(const std::vector<MixtureSpec>& specs) {
  std::vector<TestUtterance> out;
  out.reserve(specs.size());
  for (size_t i = 0; i < specs.size(); i++) {
    TestUtterance u;
    u.id = fs::path(specs[i].speech_ref).stem().string() + "+" +
           fs::path(specs[i].noise_ref).stem().string() + "@" +
           format_fixed(specs[i].snr_db, 1) + "dB#" + std::to_string(i);
    u.mix = load_mixture(specs[i]);
    out.push_back(std::move(u));
  }
  return out;
}

std::optional<double> pesq_via_tmp(const Waveform& ref, const Waveform& deg,
                                   const std::string& tmp_dir,
                                   const std::string& tag) {
  if (!pesq_available()) return std::nullopt;
  fs::create_directories(tmp_dir);
  const std::string ref_path = tmp_dir + "/" + tag + "_ref.wav";
  const std::string deg_path = tmp_dir + "/" + tag + "_deg.wav";
  write_wav(ref_path, ref, WavEncoding::Pcm16);
  write_wav(deg_path, deg, WavEncoding::Pcm16);
  auto score = pesq_external(ref_path, deg_path, ref.sample_rate);
  fs::remove(ref_path);
  fs::remove(deg_path);
  return score;
}

struct MetricColumns {
  std::vector<double> si_sdr, stoi_vals, pesq_vals;
};

void eval_one(MetricColumns& cols, const Waveform& ref, const Waveform& est,
              const std::string& tmp_dir, const std::string& tag) {
  cols.si_sdr.push_back(si_sdr(ref, est));
  cols.stoi_vals.push_back(stoi(ref, est));
  if (auto p = pesq_via_tmp(ref, est, tmp_dir, tag)) cols.pesq_vals.push_back(*p);
}

void fill_row(SweepRow& row, const MetricColumns& cols) {
  row.si_sdr = aggregate(cols.si_sdr);
  row.stoi = aggregate(cols.stoi_vals);
  if (cols.pesq_vals.size() >= 2) row.pesq = aggregate(cols.pesq_vals);
}

}  // namespace

DatasetManifests build_dataset(const DatasetBuildConfig& cfg) {
  const auto speech_files = list_wavs(cfg.speech_dir);
  const auto noise_files = list_wavs(cfg.noise_dir);

  std::map<std::string, std::vector<std::string>> by_speaker;
  for (const auto& f : speech_files) by_speaker[speaker_of(f)].push_back(f);
  if (by_speaker.size() < 3)
    throw std::runtime_error("build_dataset: need at least 3 speakers, have " +
                             std::to_string(by_speaker.size()));

  std::vector<std::string> speakers;
  for (const auto& [spk, files] : by_speaker) speakers.push_back(spk);

  Rng rng(cfg.seed);
  Rng speaker_rng = rng.fork("speakers");
  speaker_rng.shuffle(speakers);
  const auto spk_sizes =
      split_sizes(speakers.size(), cfg.train_frac, cfg.val_frac);

  std::vector<std::string> noise_pool = noise_files;
  Rng noise_rng = rng.fork("noise");
  noise_rng.shuffle(noise_pool);
  if (noise_pool.size() < 3)
    throw std::runtime_error("build_dataset: need at least 3 noise files");
  const auto noise_sizes =
      split_sizes(noise_pool.size(), cfg.train_frac, cfg.val_frac);

  const char* split_names[3] = {"train", "validation", "test"};
  DatasetManifests out;
  fs::create_directories(cfg.out_dir);

  size_t spk_at = 0, noise_at = 0;
  for (int s = 0; s < 3; s++) {
    std::vector<std::string> split_speech;
    for (size_t i = 0; i < spk_sizes[s]; i++)
      for (const auto& f : by_speaker[speakers[spk_at + i]])
        split_speech.push_back(f);
    spk_at += spk_sizes[s];
    std::sort(split_speech.begin(), split_speech.end());

    std::vector<std::string> split_noise(
        noise_pool.begin() + noise_at,
        noise_pool.begin() + noise_at + noise_sizes[s]);
    noise_at += noise_sizes[s];

    Rng mix_rng = rng.fork(std::string("mix_") + split_names[s]);
    std::vector<MixtureSpec> entries;
    for (const auto& speech : split_speech) {
      for (int m = 0; m < cfg.mixes_per_utterance; m++) {
        MixtureSpec spec;
        spec.speech_ref = speech;
        spec.noise_ref =
            split_noise[mix_rng.uniform_index(split_noise.size())];
        spec.snr_db = mix_rng.uniform(cfg.snr_min, cfg.snr_max);
        spec.seed = static_cast<std::uint64_t>(
            mix_rng.uniform_index(std::numeric_limits<std::uint32_t>::max()));
        spec.split = split_names[s];
        entries.push_back(std::move(spec));
      }
    }
    const std::string path =
        cfg.out_dir + "/" + split_names[s] + ".jsonl";
    write_manifest(path, entries);
    if (s == 0) { out.train_path = path; out.train = std::move(entries); }
    else if (s == 1) { out.val_path = path; out.val = std::move(entries); }
    else { out.test_path = path; out.test = std::move(entries); }
  }
  return out;
}

KlDiagRecord kl_diagnostic(NsVaeModel& nsvae, VaeModel& cvae, VaeModel& nvae,
                           const std::vector<MixtureSpec>& validation,
                           int frame_len, int hop_len, double lps_floor) {
  if (validation.empty())
    throw std::invalid_argument("kl_diagnostic: empty validation manifest");
  const FrameTriples triples =
      load_frame_triples(validation, frame_len, hop_len, lps_floor);

  const auto [py_x, py_d] =
      encode_chunked(nsvae, nsvae.input_stats.normalize(triples.noisy));
  const GaussianBatch px =
      encode_chunked(cvae, cvae.input_stats.normalize(triples.speech));
  const GaussianBatch pd =
      encode_chunked(nvae, nvae.input_stats.normalize(triples.noise));

  KlDiagRecord rec;
  rec.mean_kl_speech =
      kl_colwise(py_x.mean, py_x.log_var, px.mean, px.log_var).mean();
  rec.mean_kl_noise =
      kl_colwise(py_d.mean, py_d.log_var, pd.mean, pd.log_var).mean();
  return rec;
}

SweepReport run_gamma_sweep(const SweepSpec& spec) {
  if (std::find(spec.gammas.begin(), spec.gammas.end(), "1") ==
      spec.gammas.end())
    throw std::invalid_argument(
        "run_gamma_sweep: gamma = 1 (PVAE baseline) must be present");

  const auto train = read_manifest(spec.train_manifest);
  const auto val = read_manifest(spec.val_manifest);
  const auto test = read_manifest(spec.test_manifest);

  LoadedVae cvae = load_vae_checkpoint(spec.cvae_ckpt);
  LoadedVae nvae = load_vae_checkpoint(spec.nvae_ckpt);

  fs::create_directories(spec.out_dir);
  const std::string tmp_dir = spec.out_dir + "/tmp";
  const auto test_utts = materialize(test);

  SweepReport report;
  report.out_dir = spec.out_dir;

  {
    SweepRow row;
    row.method = "Noisy";
    MetricColumns cols;
    for (const auto& u : test_utts)
      eval_one(cols, u.mix.speech, u.mix.noisy, tmp_dir, "noisy_" + u.id);
    fill_row(row, cols);
    report.rows.push_back(std::move(row));
  }

  for (const auto& label : spec.gammas) {
    SweepRow row;
    row.method = "gamma=" + label;
    row.gamma_label = label;
    try {
      TrainConfig cfg = spec.base;
      cfg.stage = "nsvae";
      apply_gamma(cfg, label);
      cfg.seed = spec.seed;
      cfg.cvae_ckpt = spec.cvae_ckpt;
      cfg.nvae_ckpt = spec.nvae_ckpt;
      cfg.out_dir = spec.out_dir;
      cfg.run_name = "nsvae_gamma" + label;
      const TrainReport tr = train_nsvae(cfg, train, val);
      if (tr.diverged)
        throw std::runtime_error("training diverged; last good checkpoint kept");
      row.checkpoint = tr.checkpoint_path;
      row.trainable_params = checkpoint_param_count(tr.checkpoint_path);

      LoadedNsVae ns = load_nsvae_checkpoint(tr.checkpoint_path);
      const KlDiagRecord kl_rec = kl_diagnostic(
          *ns.model, *cvae.model, *nvae.model, val, cfg.frame_len, cfg.hop_len,
          cfg.lps_floor);
      row.kl = kl_rec;
      row.kl.gamma = label;

      MetricColumns cols;
      for (const auto& u : test_utts) {
        const EnhanceResult enh = enhance(u.mix.noisy, *ns.model, ns.meta,
                                          *cvae.model, *nvae.model,
                                          spec.enhancement);
        eval_one(cols, u.mix.speech, enh.enhanced, tmp_dir,
                 "g" + label + "_" + u.id);
      }
      fill_row(row, cols);
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
    report.rows.push_back(std::move(row));
  }

  {
    SweepRow row;
    row.method = "Oracle";
    try {
      MetricColumns cols;
      for (const auto& u : test_utts) {
        const EnhanceResult enh =
            enhance_oracle(u.mix.speech, u.mix.scaled_noise, *cvae.model,
                           *nvae.model, cvae.meta, nvae.meta, spec.enhancement);
        eval_one(cols, u.mix.speech, enh.enhanced, tmp_dir, "oracle_" + u.id);
      }
      fill_row(row, cols);
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
    report.rows.push_back(std::move(row));
  }

  emit_report(report, spec.out_dir);
  return report;
}

std::vector<EvalRecord> evaluate_pairs(const std::string& pairs_manifest) {
  std::ifstream is(pairs_manifest);
  if (!is) throw std::runtime_error("cannot open pairs manifest: " + pairs_manifest);
  std::vector<EvalRecord> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    lineno++;
    if (line.empty()) continue;
    const json j = json::parse(line);
    EvalRecord rec;
    rec.utterance_id = j.value("utterance_id", "pair" + std::to_string(lineno));
    const std::string ref_path = j.at("reference").get<std::string>();
    const std::string est_path = j.at("estimate").get<std::string>();
    const Waveform ref = read_wav(ref_path);
    const Waveform est = read_wav(est_path);
    rec.si_sdr_db = si_sdr(ref, est);
    rec.stoi = stoi(ref, est);
    rec.pesq = pesq_external(ref_path, est_path, ref.sample_rate);
    out.push_back(std::move(rec));
  }
  if (out.empty()) throw std::runtime_error("pairs manifest is empty");
  return out;
}

}  // namespace bpvae
