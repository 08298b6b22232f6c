// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Command-line front end: dataset/mixing, two-stage training, enhancement,
// evaluation, gamma sweep, KL diagnostic, and report regeneration. Every
// subcommand accepts --config <key=value file>; explicit flags win over
// config keys, config keys win over built-in defaults.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bpvae/config.hpp"
#include "bpvae/enhancement.hpp"
#include "bpvae/resample.hpp"
#include "bpvae/experiments.hpp"
#include "bpvae/report.hpp"
#include "bpvae/synth.hpp"
#include "bpvae/training.hpp"
#include "bpvae/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bpvae;

namespace {

// Flag > config key > built-in default. Each subcommand stores its flag
// variables here and reconciles them with the config file after parsing.
struct Merge {
  CLI::App* sub;
  Config cfg;

  bool flag_unset(const std::string& flag) const {
    return sub->count(flag) == 0;
  }
  void str(const std::string& flag, const std::string& key, std::string& var) {
    if (flag_unset(flag) && cfg.has(key)) var = cfg.get(key, var);
  }
  void num(const std::string& flag, const std::string& key, double& var) {
    if (flag_unset(flag) && cfg.has(key)) var = cfg.get_double(key, var);
  }
  void num(const std::string& flag, const std::string& key, int& var) {
    if (flag_unset(flag) && cfg.has(key))
      var = static_cast<int>(cfg.get_long(key, var));
  }
  void num(const std::string& flag, const std::string& key,
           std::uint64_t& var) {
    if (flag_unset(flag) && cfg.has(key))
      var = static_cast<std::uint64_t>(
          cfg.get_long(key, static_cast<long>(var)));
  }
  void flag(const std::string& flag, const std::string& key, bool& var) {
    if (flag_unset(flag) && cfg.has(key)) var = cfg.get_bool(key, var);
  }
  void ints(const std::string& flag, const std::string& key,
            std::vector<int>& var) {
    if (flag_unset(flag) && cfg.has(key)) var = cfg.get_int_list(key, var);
  }
};

Merge merge_for(CLI::App* sub, const std::string& config_path) {
  Merge m{sub, config_path.empty() ? Config() : Config::load(config_path)};
  return m;
}

struct TrainFlags {
  std::string config_path;
  std::string train_manifest, val_manifest;
  std::string out_dir = ".", run_name;
  std::string cvae_ckpt, nvae_ckpt, init_ckpt;
  std::string gamma = "1";
  double beta = 1.0;
  double lr = 1e-3, lps_floor = kDefaultPowerFloor;
  int batch_size = 128, max_epochs = 100, patience = 10, lr_patience = 3;
  int latent_dim = 128, num_bins = 257;
  int frame_len = kDefaultFrameLen, hop_len = kDefaultHopLen;
  std::uint64_t seed = 0;
  bool sampled_expectations = false;
  std::vector<int> enc_channels{32, 64, 128, 256};
  std::vector<int> dec_channels{256, 128, 64, 32};
};

void add_train_flags(CLI::App* sub, TrainFlags& f, bool nsvae) {
  sub->add_option("--config", f.config_path, "key=value config file");
  sub->add_option("--train", f.train_manifest, "training mixture manifest");
  sub->add_option("--val", f.val_manifest, "validation mixture manifest");
  sub->add_option("--out-dir", f.out_dir, "checkpoint/log directory");
  sub->add_option("--run-name", f.run_name, "checkpoint/log base name");
  sub->add_option("--lr", f.lr, "Adam learning rate");
  sub->add_option("--batch-size", f.batch_size);
  sub->add_option("--max-epochs", f.max_epochs);
  sub->add_option("--patience", f.patience, "early-stopping epochs");
  sub->add_option("--lr-patience", f.lr_patience, "epochs before lr halving");
  sub->add_option("--seed", f.seed);
  sub->add_option("--latent-dim", f.latent_dim);
  sub->add_option("--bins", f.num_bins, "LPS bins (frame_len/2 + 1)");
  sub->add_option("--frame-len", f.frame_len);
  sub->add_option("--hop-len", f.hop_len);
  sub->add_option("--lps-floor", f.lps_floor);
  sub->add_option("--enc-channels", f.enc_channels, "e.g. 32,64,128,256")
      ->delimiter(',');
  sub->add_option("--dec-channels", f.dec_channels, "e.g. 256,128,64,32")
      ->delimiter(',');
  sub->add_option("--init", f.init_ckpt, "checkpoint to resume from");
  if (nsvae) {
    sub->add_option("--gamma", f.gamma, "weight ratio beta:alpha, <r> or inf");
    sub->add_option("--cvae", f.cvae_ckpt, "frozen clean-speech teacher");
    sub->add_option("--nvae", f.nvae_ckpt, "frozen noise teacher");
    sub->add_flag("--sampled-expectations", f.sampled_expectations,
                  "1-sample MC for the Eq. (6) ratio terms");
  } else {
    sub->add_option("--beta", f.beta, "KL weight of the stage-1 VAE loss");
  }
}

TrainConfig resolve_train_config(CLI::App* sub, TrainFlags& f,
                                 const std::string& stage) {
  Merge m = merge_for(sub, f.config_path);
  m.str("--train", "train_manifest", f.train_manifest);
  m.str("--val", "val_manifest", f.val_manifest);
  m.str("--out-dir", "out_dir", f.out_dir);
  m.str("--run-name", "run_name", f.run_name);
  m.num("--lr", "lr", f.lr);
  m.num("--batch-size", "batch_size", f.batch_size);
  m.num("--max-epochs", "max_epochs", f.max_epochs);
  m.num("--patience", "patience", f.patience);
  m.num("--lr-patience", "lr_patience", f.lr_patience);
  m.num("--seed", "seed", f.seed);
  m.num("--latent-dim", "latent_dim", f.latent_dim);
  m.num("--bins", "num_bins", f.num_bins);
  m.num("--frame-len", "frame_len", f.frame_len);
  m.num("--hop-len", "hop_len", f.hop_len);
  m.num("--lps-floor", "lps_floor", f.lps_floor);
  m.ints("--enc-channels", "enc_channels", f.enc_channels);
  m.ints("--dec-channels", "dec_channels", f.dec_channels);
  m.str("--init", "init_ckpt", f.init_ckpt);
  if (stage == "nsvae") {
    m.str("--gamma", "gamma", f.gamma);
    m.str("--cvae", "cvae_ckpt", f.cvae_ckpt);
    m.str("--nvae", "nvae_ckpt", f.nvae_ckpt);
    m.flag("--sampled-expectations", "sampled_expectations",
           f.sampled_expectations);
  } else {
    m.num("--beta", "beta", f.beta);
  }

  TrainConfig cfg;
  cfg.stage = stage;
  cfg.lr = f.lr;
  cfg.batch_size = f.batch_size;
  cfg.max_epochs = f.max_epochs;
  cfg.patience = f.patience;
  cfg.lr_patience = f.lr_patience;
  cfg.seed = f.seed;
  cfg.enc_channels = f.enc_channels;
  cfg.dec_channels = f.dec_channels;
  cfg.latent_dim = f.latent_dim;
  cfg.num_bins = f.num_bins;
  cfg.frame_len = f.frame_len;
  cfg.hop_len = f.hop_len;
  cfg.lps_floor = f.lps_floor;
  cfg.sampled_expectations = f.sampled_expectations;
  cfg.out_dir = f.out_dir;
  cfg.run_name = f.run_name;
  cfg.init_ckpt = f.init_ckpt;
  if (stage == "nsvae") {
    apply_gamma(cfg, f.gamma);
    cfg.cvae_ckpt = f.cvae_ckpt;
    cfg.nvae_ckpt = f.nvae_ckpt;
    if (cfg.cvae_ckpt.empty() || cfg.nvae_ckpt.empty())
      throw std::runtime_error("train-nsvae needs --cvae and --nvae teachers");
  } else {
    cfg.beta = f.beta;
  }
  if (f.train_manifest.empty() || f.val_manifest.empty())
    throw std::runtime_error(stage +
                             ": --train and --val manifests are required");
  return cfg;
}

json report_json(const TrainReport& r) {
  json j;
  j["best_epoch"] = r.best_epoch;
  j["best_val_total"] = r.best_val_total;
  j["epochs_run"] = r.epochs.size();
  j["checkpoint"] = r.checkpoint_path;
  j["log"] = r.log_path;
  j["diverged"] = r.diverged;
  return j;
}

void run_training(CLI::App* sub, TrainFlags& f, const std::string& stage) {
  TrainConfig cfg = resolve_train_config(sub, f, stage);
  const auto train = read_manifest(f.train_manifest);
  const auto val = read_manifest(f.val_manifest);
  TrainReport r;
  if (stage == "cvae") r = pretrain_clean_vae(cfg, train, val);
  else if (stage == "nvae") r = pretrain_noise_vae(cfg, train, val);
  else r = train_nsvae(cfg, train, val);
  std::cout << report_json(r).dump(2) << "\n";
  if (r.diverged) throw std::runtime_error("training diverged");
}

struct EnhanceFlags {
  std::string config_path, input, out_dir;
  std::string nsvae_ckpt, cvae_ckpt, nvae_ckpt;
  std::string latent_mode = "mean";
  double mask_exponent = 0.5, mask_floor = 0.0;
  bool oracle = false;
  std::uint64_t seed = 0;
  int frame_len = kDefaultFrameLen, hop_len = kDefaultHopLen;
};

EnhancementConfig resolve_enhance_config(const EnhanceFlags& f) {
  EnhancementConfig cfg;
  if (f.latent_mode == "mean")
    cfg.latent_mode = EnhancementConfig::LatentMode::PosteriorMean;
  else if (f.latent_mode == "sampled")
    cfg.latent_mode = EnhancementConfig::LatentMode::Sampled;
  else
    throw std::runtime_error("latent mode must be 'mean' or 'sampled', got '" +
                             f.latent_mode + "'");
  cfg.mask_exponent = f.mask_exponent;
  cfg.mask_floor = f.mask_floor;
  cfg.oracle = f.oracle;
  cfg.seed = f.seed;
  cfg.frame_len = f.frame_len;
  cfg.hop_len = f.hop_len;
  return cfg;
}

void add_enhance_shared_flags(CLI::App* sub, EnhanceFlags& f) {
  sub->add_option("--cvae", f.cvae_ckpt, "clean-speech teacher checkpoint");
  sub->add_option("--nvae", f.nvae_ckpt, "noise teacher checkpoint");
  sub->add_option("--mask-exponent", f.mask_exponent);
  sub->add_option("--mask-floor", f.mask_floor);
  sub->add_option("--latent-mode", f.latent_mode, "mean | sampled");
  sub->add_option("--seed", f.seed, "sampled latent-mode seed");
  sub->add_option("--frame-len", f.frame_len);
  sub->add_option("--hop-len", f.hop_len);
}

void merge_enhance_flags(CLI::App* sub, EnhanceFlags& f) {
  Merge m = merge_for(sub, f.config_path);
  m.str("--cvae", "cvae_ckpt", f.cvae_ckpt);
  m.str("--nvae", "nvae_ckpt", f.nvae_ckpt);
  m.num("--mask-exponent", "mask_exponent", f.mask_exponent);
  m.num("--mask-floor", "mask_floor", f.mask_floor);
  m.str("--latent-mode", "latent_mode", f.latent_mode);
  m.num("--seed", "seed", f.seed);
  m.num("--frame-len", "frame_len", f.frame_len);
  m.num("--hop-len", "hop_len", f.hop_len);
}

Waveform load_model_rate(const std::string& path) {
  Waveform w = read_wav(path);
  if (w.sample_rate != kModelSampleRate) {
    const int g = std::gcd(kModelSampleRate, w.sample_rate);
    w = resample_poly(w, kModelSampleRate / g, w.sample_rate / g);
  }
  return w;
}

void write_enhanced(const std::string& out_dir, const std::string& stem,
                    const EnhanceResult& result) {
  fs::create_directories(out_dir);
  write_wav(out_dir + "/" + stem + "_enhanced.wav", result.enhanced,
            WavEncoding::Float32);
  std::ofstream os(out_dir + "/" + stem + "_diagnostics.json",
                   std::ios::binary);
  os << result.diagnostics.to_json() << "\n";
}

void run_enhance(CLI::App* sub, EnhanceFlags& f) {
  Merge m = merge_for(sub, f.config_path);
  m.str("--in", "input", f.input);
  m.str("--out", "out_dir", f.out_dir);
  m.str("--nsvae", "nsvae_ckpt", f.nsvae_ckpt);
  m.flag("--oracle", "oracle", f.oracle);
  merge_enhance_flags(sub, f);
  if (f.input.empty() || f.out_dir.empty())
    throw std::runtime_error("enhance needs --in and --out");
  if (f.cvae_ckpt.empty() || f.nvae_ckpt.empty())
    throw std::runtime_error("enhance needs --cvae and --nvae");
  const EnhancementConfig cfg = resolve_enhance_config(f);

  LoadedVae cvae = load_vae_checkpoint(f.cvae_ckpt);
  LoadedVae nvae = load_vae_checkpoint(f.nvae_ckpt);
  std::optional<LoadedNsVae> ns;
  if (!f.oracle) {
    if (f.nsvae_ckpt.empty())
      throw std::runtime_error("enhance needs --nsvae (or --oracle)");
    ns = load_nsvae_checkpoint(f.nsvae_ckpt);
  }

  const bool manifest_input = fs::path(f.input).extension() == ".jsonl";
  if (f.oracle && !manifest_input)
    throw std::runtime_error(
        "--oracle needs a mixture manifest: clean speech and noise "
        "references are required");

  json index = json::array();
  if (manifest_input) {
    const auto entries = read_manifest(f.input);
    for (size_t i = 0; i < entries.size(); i++) {
      const MixResult mix = load_mixture(entries[i]);
      char stem[32];
      std::snprintf(stem, sizeof stem, "mix%04zu", i);
      const EnhanceResult result =
          f.oracle ? enhance_oracle(mix.speech, mix.scaled_noise, *cvae.model,
                                    *nvae.model, cvae.meta, nvae.meta, cfg)
                   : enhance(mix.noisy, *ns->model, ns->meta, *cvae.model,
                             *nvae.model, cfg);
      write_enhanced(f.out_dir, stem, result);
      write_wav(f.out_dir + "/" + stem + "_noisy.wav", mix.noisy,
                WavEncoding::Float32);
      write_wav(f.out_dir + "/" + stem + "_reference.wav", mix.speech,
                WavEncoding::Float32);
      index.push_back({{"utterance_id", stem},
                       {"reference", f.out_dir + "/" + stem + "_reference.wav"},
                       {"estimate", f.out_dir + "/" + stem + "_enhanced.wav"}});
    }
    std::ofstream os(f.out_dir + "/pairs.jsonl", std::ios::binary);
    for (const auto& row : index) os << row.dump() << "\n";
    std::cout << "enhanced " << entries.size() << " mixtures into " << f.out_dir
              << "\n";
  } else {
    const Waveform noisy = load_model_rate(f.input);
    const EnhanceResult result = enhance(noisy, *ns->model, ns->meta,
                                         *cvae.model, *nvae.model, cfg);
    const std::string stem = fs::path(f.input).stem().string();
    write_enhanced(f.out_dir, stem, result);
    std::cout << result.diagnostics.to_json() << "\n";
  }
}

SweepRow parse_row(const json& j) {
  SweepRow row;
  row.method = j.at("method").get<std::string>();
  row.gamma_label = j.value("gamma", "");
  auto agg = [](const json& v) {
    MetricAggregate a;
    if (!v.is_null()) {
      a.mean = v.at("mean").get<double>();
      a.ci95 = v.at("ci95").get<double>();
      a.n = v.at("n").get<long>();
    }
    return a;
  };
  if (j.contains("si_sdr_db")) row.si_sdr = agg(j["si_sdr_db"]);
  if (j.contains("stoi")) row.stoi = agg(j["stoi"]);
  if (j.contains("pesq") && !j["pesq"].is_null()) row.pesq = agg(j["pesq"]);
  if (j.contains("kl_speech")) {
    row.kl.gamma = row.gamma_label;
    row.kl.mean_kl_speech = j["kl_speech"].get<double>();
    row.kl.mean_kl_noise = j["kl_noise"].get<double>();
  }
  row.trainable_params = j.value("trainable_params", 0L);
  row.checkpoint = j.value("checkpoint", "");
  row.failed = j.value("failed", false);
  row.error = j.value("error", "");
  return row;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"beta-PVAE speech enhancement toolkit"};
  app.require_subcommand(1);

  // ---- synth-data
  auto* synth = app.add_subcommand(
      "synth-data", "Generate the synthetic speech/noise corpus");
  struct {
    std::string config_path, out_dir;
    SynthCorpusConfig cfg;
  } sd;
  synth->add_option("--config", sd.config_path);
  synth->add_option("--out", sd.out_dir, "corpus root directory");
  synth->add_option("--speakers", sd.cfg.num_speakers);
  synth->add_option("--utterances", sd.cfg.utterances_per_speaker);
  synth->add_option("--noise-files", sd.cfg.num_noise_files);
  synth->add_option("--utt-seconds-min", sd.cfg.utt_seconds_min);
  synth->add_option("--utt-seconds-max", sd.cfg.utt_seconds_max);
  synth->add_option("--noise-seconds", sd.cfg.noise_seconds);
  synth->add_option("--seed", sd.cfg.seed);
  synth->callback([&] {
    Merge m = merge_for(synth, sd.config_path);
    m.str("--out", "corpus_dir", sd.out_dir);
    m.num("--speakers", "speakers", sd.cfg.num_speakers);
    m.num("--utterances", "utterances_per_speaker",
          sd.cfg.utterances_per_speaker);
    m.num("--noise-files", "noise_files", sd.cfg.num_noise_files);
    m.num("--utt-seconds-min", "utt_seconds_min", sd.cfg.utt_seconds_min);
    m.num("--utt-seconds-max", "utt_seconds_max", sd.cfg.utt_seconds_max);
    m.num("--noise-seconds", "noise_seconds", sd.cfg.noise_seconds);
    m.num("--seed", "seed", sd.cfg.seed);
    if (sd.out_dir.empty()) throw std::runtime_error("synth-data needs --out");
    const SynthCorpus corpus = generate_corpus(sd.out_dir, sd.cfg);
    std::cout << json{{"speech_files", corpus.speech_files.size()},
                      {"noise_files", corpus.noise_files.size()},
                      {"root", sd.out_dir}}
                     .dump(2)
              << "\n";
  });

  // ---- mix
  auto* mix = app.add_subcommand(
      "mix", "Build speaker-disjoint train/validation/test mixture manifests");
  struct {
    std::string config_path;
    DatasetBuildConfig cfg;
    bool write_wavs = false;
  } mx;
  mix->add_option("--config", mx.config_path);
  mix->add_option("--speech-dir", mx.cfg.speech_dir);
  mix->add_option("--noise-dir", mx.cfg.noise_dir);
  mix->add_option("--out-dir", mx.cfg.out_dir);
  mix->add_option("--train-frac", mx.cfg.train_frac);
  mix->add_option("--val-frac", mx.cfg.val_frac);
  mix->add_option("--snr-min", mx.cfg.snr_min);
  mix->add_option("--snr-max", mx.cfg.snr_max);
  mix->add_option("--mixes-per-utterance", mx.cfg.mixes_per_utterance);
  mix->add_option("--seed", mx.cfg.seed);
  mix->add_flag("--write-wavs", mx.write_wavs,
                "materialize noisy/speech/noise wavs per entry");
  mix->callback([&] {
    Merge m = merge_for(mix, mx.config_path);
    m.str("--speech-dir", "speech_dir", mx.cfg.speech_dir);
    m.str("--noise-dir", "noise_dir", mx.cfg.noise_dir);
    m.str("--out-dir", "dataset_dir", mx.cfg.out_dir);
    m.num("--train-frac", "train_frac", mx.cfg.train_frac);
    m.num("--val-frac", "val_frac", mx.cfg.val_frac);
    m.num("--snr-min", "snr_min", mx.cfg.snr_min);
    m.num("--snr-max", "snr_max", mx.cfg.snr_max);
    m.num("--mixes-per-utterance", "mixes_per_utterance",
          mx.cfg.mixes_per_utterance);
    m.num("--seed", "seed", mx.cfg.seed);
    m.flag("--write-wavs", "write_wavs", mx.write_wavs);
    if (mx.cfg.speech_dir.empty() || mx.cfg.noise_dir.empty() ||
        mx.cfg.out_dir.empty())
      throw std::runtime_error("mix needs --speech-dir, --noise-dir, --out-dir");
    const DatasetManifests ds = build_dataset(mx.cfg);
    if (mx.write_wavs) {
      const std::vector<std::pair<std::string, const std::vector<MixtureSpec>*>>
          splits{{"train", &ds.train},
                 {"validation", &ds.val},
                 {"test", &ds.test}};
      for (const auto& [name, entries] : splits) {
        const std::string dir = mx.cfg.out_dir + "/wavs/" + name;
        fs::create_directories(dir);
        for (size_t i = 0; i < entries->size(); i++) {
          const MixResult r = load_mixture((*entries)[i]);
          char stem[32];
          std::snprintf(stem, sizeof stem, "mix%04zu", i);
          write_wav(dir + "/" + stem + "_noisy.wav", r.noisy,
                    WavEncoding::Float32);
          write_wav(dir + "/" + stem + "_speech.wav", r.speech,
                    WavEncoding::Float32);
          write_wav(dir + "/" + stem + "_noise.wav", r.scaled_noise,
                    WavEncoding::Float32);
        }
      }
    }
    std::cout << json{{"train", {{"path", ds.train_path}, {"n", ds.train.size()}}},
                      {"validation", {{"path", ds.val_path}, {"n", ds.val.size()}}},
                      {"test", {{"path", ds.test_path}, {"n", ds.test.size()}}}}
                     .dump(2)
              << "\n";
  });

  // ---- training stages
  auto* tc = app.add_subcommand("train-cvae", "Pretrain the clean-speech VAE");
  auto tc_flags = std::make_shared<TrainFlags>();
  add_train_flags(tc, *tc_flags, false);
  tc->callback([&, tc_flags] { run_training(tc, *tc_flags, "cvae"); });

  auto* tn = app.add_subcommand("train-nvae", "Pretrain the noise VAE");
  auto tn_flags = std::make_shared<TrainFlags>();
  add_train_flags(tn, *tn_flags, false);
  tn->callback([&, tn_flags] { run_training(tn, *tn_flags, "nvae"); });

  auto* ts = app.add_subcommand(
      "train-nsvae", "Train the noisy-speech VAE against frozen teachers");
  auto ts_flags = std::make_shared<TrainFlags>();
  add_train_flags(ts, *ts_flags, true);
  ts->callback([&, ts_flags] { run_training(ts, *ts_flags, "nsvae"); });

  // ---- enhance
  auto* enh = app.add_subcommand("enhance", "Mask-based speech enhancement");
  auto enh_flags = std::make_shared<EnhanceFlags>();
  enh->add_option("--config", enh_flags->config_path);
  enh->add_option("--in", enh_flags->input, "noisy wav or mixture manifest");
  enh->add_option("--out", enh_flags->out_dir, "output directory");
  enh->add_option("--nsvae", enh_flags->nsvae_ckpt, "NS-VAE checkpoint");
  enh->add_flag("--oracle", enh_flags->oracle,
                "teacher encoders on the clean references (upper bound)");
  add_enhance_shared_flags(enh, *enh_flags);
  enh->callback([&, enh_flags] { run_enhance(enh, *enh_flags); });

  // ---- evaluate
  auto* ev = app.add_subcommand("evaluate", "SI-SDR/STOI (and PESQ) report");
  struct {
    std::string pairs, out = "report.csv";
  } evf;
  ev->add_option("--pairs", evf.pairs,
                 "JSONL manifest: {utterance_id, reference, estimate}")
      ->required();
  ev->add_option("--out", evf.out, "per-utterance CSV path");
  ev->callback([&] {
    const auto records = evaluate_pairs(evf.pairs);
    write_eval_csv(evf.out, records);
    std::string agg_path = evf.out;
    const std::string suffix = ".csv";
    if (agg_path.size() > suffix.size() &&
        agg_path.compare(agg_path.size() - suffix.size(), suffix.size(),
                         suffix) == 0)
      agg_path.resize(agg_path.size() - suffix.size());
    agg_path += "_aggregate.json";
    write_eval_aggregate_json(agg_path, records);
    std::cout << json{{"csv", evf.out},
                      {"aggregate", agg_path},
                      {"n", records.size()}}
                     .dump(2)
              << "\n";
  });

  // ---- sweep-gamma
  auto* sw = app.add_subcommand(
      "sweep-gamma", "Train/evaluate one NS-VAE per gamma and emit the report");
  auto sw_train = std::make_shared<TrainFlags>();
  struct SweepFlags {
    std::string test_manifest, sweep_out;
    std::vector<std::string> gammas;
  };
  auto swf = std::make_shared<SweepFlags>();
  add_train_flags(sw, *sw_train, true);
  sw->add_option("--test", swf->test_manifest, "test mixture manifest");
  sw->add_option("--sweep-out", swf->sweep_out,
                 "report directory (defaults to --out-dir)");
  sw->add_option("--gammas", swf->gammas, "e.g. 1,2,5,10,100,1000,inf")
      ->delimiter(',');
  auto sw_enh = std::make_shared<EnhanceFlags>();
  sw->add_option("--mask-exponent", sw_enh->mask_exponent);
  sw->add_option("--mask-floor", sw_enh->mask_floor);
  sw->add_option("--latent-mode", sw_enh->latent_mode, "mean | sampled");
  sw->callback([&, sw_train, swf, sw_enh] {
    TrainConfig base = resolve_train_config(sw, *sw_train, "nsvae");
    Merge m = merge_for(sw, sw_train->config_path);
    m.str("--test", "test_manifest", swf->test_manifest);
    m.str("--sweep-out", "sweep_out", swf->sweep_out);
    if (m.flag_unset("--gammas") && m.cfg.has("gammas")) {
      swf->gammas.clear();
      std::stringstream ss(m.cfg.get("gammas", ""));
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        tok.erase(0, tok.find_first_not_of(" \t"));
        tok.erase(tok.find_last_not_of(" \t") + 1);
        if (!tok.empty()) swf->gammas.push_back(tok);
      }
    }
    sw_enh->config_path = sw_train->config_path;
    sw_enh->frame_len = base.frame_len;
    sw_enh->hop_len = base.hop_len;
    merge_enhance_flags(sw, *sw_enh);

    SweepSpec spec;
    if (!swf->gammas.empty()) spec.gammas = swf->gammas;
    spec.seed = base.seed;
    spec.train_manifest = sw_train->train_manifest;
    spec.val_manifest = sw_train->val_manifest;
    spec.test_manifest = swf->test_manifest;
    spec.cvae_ckpt = base.cvae_ckpt;
    spec.nvae_ckpt = base.nvae_ckpt;
    spec.out_dir = swf->sweep_out.empty() ? base.out_dir : swf->sweep_out;
    spec.base = base;
    spec.enhancement = resolve_enhance_config(*sw_enh);
    if (spec.test_manifest.empty())
      throw std::runtime_error("sweep-gamma needs --test manifest");

    const SweepReport report = run_gamma_sweep(spec);
    for (const auto& row : report.rows) {
      std::cout << row.method;
      if (row.failed) {
        std::cout << "  FAILED: " << row.error << "\n";
        continue;
      }
      std::cout << "  si_sdr " << format_fixed(row.si_sdr.mean, 2) << " (±"
                << format_fixed(row.si_sdr.ci95, 2) << ")  stoi "
                << format_fixed(100.0 * row.stoi.mean, 1);
      if (!row.gamma_label.empty())
        std::cout << "  kl_speech " << format_fixed(row.kl.mean_kl_speech, 4)
                  << "  kl_noise " << format_fixed(row.kl.mean_kl_noise, 4)
                  << "  params " << row.trainable_params;
      std::cout << "\n";
    }
    std::cout << "report: " << report.out_dir << "/{sweep.csv, table.md, "
                 "kl_divergence.svg, aggregate.json}\n";
  });

  // ---- kl-diag
  auto* kd = app.add_subcommand(
      "kl-diag", "Mean KL between NS-VAE posteriors and teacher posteriors");
  struct {
    std::string config_path, nsvae, cvae, nvae, manifest, out;
    int frame_len = kDefaultFrameLen, hop_len = kDefaultHopLen;
    double lps_floor = kDefaultPowerFloor;
  } kdf;
  kd->add_option("--config", kdf.config_path);
  kd->add_option("--nsvae", kdf.nsvae)->required();
  kd->add_option("--cvae", kdf.cvae);
  kd->add_option("--nvae", kdf.nvae);
  kd->add_option("--manifest", kdf.manifest, "validation mixture manifest");
  kd->add_option("--out", kdf.out, "optional JSON output path");
  kd->add_option("--frame-len", kdf.frame_len);
  kd->add_option("--hop-len", kdf.hop_len);
  kd->add_option("--lps-floor", kdf.lps_floor);
  kd->callback([&] {
    Merge m = merge_for(kd, kdf.config_path);
    m.str("--cvae", "cvae_ckpt", kdf.cvae);
    m.str("--nvae", "nvae_ckpt", kdf.nvae);
    m.str("--manifest", "val_manifest", kdf.manifest);
    m.num("--frame-len", "frame_len", kdf.frame_len);
    m.num("--hop-len", "hop_len", kdf.hop_len);
    m.num("--lps-floor", "lps_floor", kdf.lps_floor);
    if (kdf.cvae.empty() || kdf.nvae.empty() || kdf.manifest.empty())
      throw std::runtime_error("kl-diag needs --cvae, --nvae, --manifest");
    LoadedNsVae ns = load_nsvae_checkpoint(kdf.nsvae);
    LoadedVae cv = load_vae_checkpoint(kdf.cvae);
    LoadedVae nv = load_vae_checkpoint(kdf.nvae);
    const auto entries = read_manifest(kdf.manifest);
    const KlDiagRecord rec =
        kl_diagnostic(*ns.model, *cv.model, *nv.model, entries, kdf.frame_len,
                      kdf.hop_len, kdf.lps_floor);
    const json j{{"gamma", ns.meta.gamma_label},
                 {"mean_kl_speech", rec.mean_kl_speech},
                 {"mean_kl_noise", rec.mean_kl_noise}};
    if (!kdf.out.empty()) {
      std::ofstream os(kdf.out, std::ios::binary);
      os << j.dump(2) << "\n";
    }
    std::cout << j.dump(2) << "\n";
  });

  // ---- report
  auto* rp = app.add_subcommand(
      "report", "Regenerate CSV/markdown/SVG from a sweep aggregate.json");
  struct {
    std::string aggregate, out_dir;
  } rpf;
  rp->add_option("--aggregate", rpf.aggregate)->required();
  rp->add_option("--out", rpf.out_dir)->required();
  rp->callback([&] {
    std::ifstream is(rpf.aggregate);
    if (!is) throw std::runtime_error("cannot open " + rpf.aggregate);
    json j;
    is >> j;
    SweepReport report;
    report.out_dir = rpf.out_dir;
    for (const auto& row : j.at("rows")) report.rows.push_back(parse_row(row));
    emit_report(report, rpf.out_dir);
    std::cout << "report written to " << rpf.out_dir << "\n";
  });

  try {
    CLI11_PARSE(app, argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
