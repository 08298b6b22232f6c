// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <string>

#include "bpvae/checkpoint.hpp"
#include "bpvae/config.hpp"
#include "bpvae/dataset.hpp"
#include "bpvae/enhancement.hpp"
#include "bpvae/experiments.hpp"
#include "bpvae/metrics.hpp"
#include "bpvae/report.hpp"
#include "bpvae/synth.hpp"
#include "bpvae/training.hpp"
#include "bpvae/wav.hpp"

using namespace bpvae;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = "/tmp/bpvae_pipeline_test";

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string speaker_prefix(const std::string& path) {
  const std::string stem = fs::path(path).stem().string();
  return stem.substr(0, stem.find('_'));
}

// Corpus + dataset shared by the heavier cases; built once on first use.
struct World {
  SynthCorpus corpus;
  DatasetManifests data;
};

const World& world() {
  static World w = [] {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);
    SynthCorpusConfig cc;
    cc.num_speakers = 4;
    cc.utterances_per_speaker = 2;
    cc.num_noise_files = 4;
    cc.utt_seconds_min = 0.7;
    cc.utt_seconds_max = 0.9;
    cc.noise_seconds = 2.0;
    cc.seed = 7;
    World out;
    out.corpus = generate_corpus((kRoot / "corpus").string(), cc);

    DatasetBuildConfig dc;
    dc.speech_dir = (kRoot / "corpus" / "speech").string();
    dc.noise_dir = (kRoot / "corpus" / "noise").string();
    dc.out_dir = (kRoot / "data").string();
    dc.snr_min = -5.0;
    dc.snr_max = 5.0;
    dc.seed = 11;
    out.data = build_dataset(dc);
    return out;
  }();
  return w;
}

TrainConfig tiny_train_config(const std::string& stage, const fs::path& out) {
  TrainConfig cfg;
  cfg.stage = stage;
  cfg.batch_size = 64;
  cfg.max_epochs = 2;
  cfg.seed = 3;
  cfg.enc_channels = {3, 4};
  cfg.dec_channels = {4, 3};
  cfg.latent_dim = 6;
  cfg.num_bins = 33;
  cfg.frame_len = 64;
  cfg.hop_len = 32;
  cfg.out_dir = out.string();
  return cfg;
}

EncoderSpec mini_enc(int heads, int latent, int bins) {
  EncoderSpec s;
  s.conv_channels = {3, 4};
  s.latent_dim = latent;
  s.num_heads = heads;
  s.input_bins = bins;
  return s;
}

DecoderSpec mini_dec(int latent, int bins) {
  DecoderSpec s;
  s.conv_channels = {4, 3};
  s.out_dim = bins;
  s.latent_dim = latent;
  return s;
}

FeatureStats unit_stats(int bins) {
  FeatureStats st;
  st.mean = Eigen::VectorXd::Zero(bins);
  st.std = Eigen::VectorXd::Ones(bins);
  return st;
}

}  // namespace

TEST_CASE("config file: comments, precedence, typed accessors") {
  const Config c = Config::from_string(
      "# a comment\n"
      "lr = 1e-3\n"
      "  batch_size=64   # trailing comment\n"
      "name = run a\n"
      "flag = true\n"
      "channels = 3, 4, 5\n"
      "lr = 2e-3\n");
  CHECK(c.has("lr"));
  CHECK(c.get_double("lr", 0.0) == doctest::Approx(2e-3));  // later wins
  CHECK(c.get_long("batch_size", 0) == 64);
  CHECK(c.get("name", "") == "run a");
  CHECK(c.get_bool("flag", false));
  CHECK(c.get_int_list("channels", {}) == std::vector<int>{3, 4, 5});
  CHECK(c.get("missing", "fallback") == "fallback");
  CHECK_THROWS(c.require("missing"));
  CHECK_THROWS(Config::from_string("no_equals_sign\n"));
  CHECK_THROWS(Config::load("/nonexistent/bpvae.conf"));
}

TEST_CASE("mixture manifest round-trips every field") {
  fs::create_directories(kRoot);
  std::vector<MixtureSpec> entries(2);
  entries[0] = {"/a/spk01_utt00.wav", "/n/white_00.wav", -3.25, 42, "train"};
  entries[1] = {"/a/spk02_utt01.wav", "/n/hum_02.wav", 12.5, 7, "test"};
  const std::string path = (kRoot / "manifest_roundtrip.jsonl").string();
  write_manifest(path, entries);
  const auto back = read_manifest(path);
  REQUIRE(back.size() == 2);
  for (size_t i = 0; i < 2; i++) {
    CHECK(back[i].speech_ref == entries[i].speech_ref);
    CHECK(back[i].noise_ref == entries[i].noise_ref);
    CHECK(back[i].snr_db == entries[i].snr_db);
    CHECK(back[i].seed == entries[i].seed);
    CHECK(back[i].split == entries[i].split);
  }
  CHECK_THROWS(read_manifest("/nonexistent/manifest.jsonl"));
}

TEST_CASE("synthetic corpus: inventory, readability, determinism") {
  const World& w = world();
  CHECK(w.corpus.speech_files.size() == 8);
  CHECK(w.corpus.noise_files.size() == 4);
  const Waveform utt = read_wav(w.corpus.speech_files[0]);
  CHECK(utt.sample_rate == 16000);
  CHECK(utt.duration_s() >= 0.7);
  CHECK(utt.all_finite());

  SynthCorpusConfig cc;
  cc.num_speakers = 4;
  cc.utterances_per_speaker = 2;
  cc.num_noise_files = 4;
  cc.utt_seconds_min = 0.7;
  cc.utt_seconds_max = 0.9;
  cc.noise_seconds = 2.0;
  cc.seed = 7;
  const SynthCorpus again = generate_corpus((kRoot / "corpus2").string(), cc);
  CHECK(slurp(again.speech_files[0]) == slurp(w.corpus.speech_files[0]));
  CHECK(slurp(again.noise_files.back()) == slurp(w.corpus.noise_files.back()));
}

TEST_CASE("dataset split: disjoint speakers and noise, SNR range, seeds") {
  const World& w = world();
  const auto& d = w.data;
  CHECK(!d.train.empty());
  CHECK(!d.val.empty());
  CHECK(!d.test.empty());

  std::set<std::string> spk_train, spk_val, spk_test;
  std::set<std::string> noise_train, noise_val, noise_test;
  std::set<uint64_t> seeds;
  auto collect = [&](const std::vector<MixtureSpec>& v,
                     std::set<std::string>& spk, std::set<std::string>& noi) {
    for (const auto& m : v) {
      spk.insert(speaker_prefix(m.speech_ref));
      noi.insert(m.noise_ref);
      seeds.insert(m.seed);
      CHECK(m.snr_db >= -5.0);
      CHECK(m.snr_db <= 5.0);
      CHECK(fs::exists(m.speech_ref));
      CHECK(fs::exists(m.noise_ref));
    }
  };
  collect(d.train, spk_train, noise_train);
  collect(d.val, spk_val, noise_val);
  collect(d.test, spk_test, noise_test);
  for (const auto& s : spk_val) CHECK(spk_train.count(s) == 0);
  for (const auto& s : spk_test) {
    CHECK(spk_train.count(s) == 0);
    CHECK(spk_val.count(s) == 0);
  }
  for (const auto& s : noise_val) CHECK(noise_train.count(s) == 0);
  for (const auto& s : noise_test) {
    CHECK(noise_train.count(s) == 0);
    CHECK(noise_val.count(s) == 0);
  }
  CHECK(seeds.size() == d.train.size() + d.val.size() + d.test.size());

  DatasetBuildConfig dc;
  dc.speech_dir = (kRoot / "corpus" / "speech").string();
  dc.noise_dir = (kRoot / "corpus" / "noise").string();
  dc.out_dir = (kRoot / "data_again").string();
  dc.snr_min = -5.0;
  dc.snr_max = 5.0;
  dc.seed = 11;
  build_dataset(dc);
  CHECK(slurp(kRoot / "data_again" / "train.jsonl") ==
        slurp(kRoot / "data" / "train.jsonl"));
  CHECK(slurp(kRoot / "data_again" / "test.jsonl") ==
        slurp(kRoot / "data" / "test.jsonl"));
}

TEST_CASE("dataset split rejects corpora with fewer than 3 speakers") {
  const World& w = world();
  const fs::path small = kRoot / "two_speakers";
  fs::create_directories(small);
  fs::copy_file(w.corpus.speech_files[0], small / "spk00_utt00.wav",
                fs::copy_options::overwrite_existing);
  fs::copy_file(w.corpus.speech_files[2], small / "spk01_utt00.wav",
                fs::copy_options::overwrite_existing);
  DatasetBuildConfig dc;
  dc.speech_dir = small.string();
  dc.noise_dir = (kRoot / "corpus" / "noise").string();
  dc.out_dir = (kRoot / "data_small").string();
  CHECK_THROWS(build_dataset(dc));
}

TEST_CASE("frame triples align columns with per-entry spans") {
  const World& w = world();
  const auto entries = std::vector<MixtureSpec>(w.data.train.begin(),
                                                w.data.train.begin() + 2);
  const FrameTriples t = load_frame_triples(entries, 64, 32);
  REQUIRE(t.spans.size() == 2);
  CHECK(t.spans[0].first == 0);
  CHECK(t.spans[0].second + t.spans[1].second == t.num_frames());
  CHECK(t.noisy.rows() == 33);
  CHECK(t.noisy.allFinite());
  CHECK(t.speech.allFinite());
  CHECK(t.noise.allFinite());

  const MixResult mix = load_mixture(entries[0]);
  const LpsFrames direct = lps(stft(mix.noisy, 64, 32));
  CHECK(direct.num_frames() == t.spans[0].second);
  CHECK((t.noisy.leftCols(t.spans[0].second) - direct.values).cwiseAbs()
            .maxCoeff() <= 1e-12);
}

TEST_CASE("config_hash keys on the training-relevant fields") {
  const TrainConfig a = tiny_train_config("cvae", kRoot / "runs");
  TrainConfig b = a;
  CHECK(config_hash(a) == config_hash(b));
  b.lr *= 2.0;
  CHECK(config_hash(a) != config_hash(b));
  TrainConfig c = a;
  c.seed += 1;
  CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("train steps with update=false do not touch parameters") {
  Rng rng(21);
  VaeModel vae(mini_enc(2, 6, 33), mini_dec(6, 33), 5, "frozen_check");
  nn::Adam opt(vae.params(), {});
  const Eigen::MatrixXd x = rng.normal_matrix(33, 8);
  std::vector<Eigen::MatrixXd> before;
  for (nn::Tensor* t : vae.params()) before.push_back(t->value);
  vae_train_step(vae, opt, x, 1.0, rng, false);
  size_t i = 0;
  for (nn::Tensor* t : vae.params())
    CHECK((t->value.array() == before[i++].array()).all());

  NsVaeModel ns(mini_enc(4, 6, 33), std::nullopt, 6, "frozen_ns");
  nn::Adam opt2(ns.params(), {});
  const GaussianBatch xt{rng.normal_matrix(6, 8), rng.normal_matrix(6, 8)};
  const GaussianBatch dt{rng.normal_matrix(6, 8), rng.normal_matrix(6, 8)};
  std::vector<Eigen::MatrixXd> before2;
  for (nn::Tensor* t : ns.params()) before2.push_back(t->value);
  nsvae_train_step(ns, opt2, x, xt, dt, 0.0, 1.0, false, rng, false);
  i = 0;
  for (nn::Tensor* t : ns.params())
    CHECK((t->value.array() == before2[i++].array()).all());
}

TEST_CASE("a single batch can be overfitted") {
  Rng rng(22);
  VaeModel vae(mini_enc(2, 6, 33), mini_dec(6, 33), 23, "overfit");
  nn::AdamConfig ac;
  ac.lr = 3e-3;
  nn::Adam opt(vae.params(), ac);
  const Eigen::MatrixXd x = rng.normal_matrix(33, 16);
  double early = 0.0, late = 0.0;
  for (int step = 0; step < 50; step++) {
    const LossBreakdown b = vae_train_step(vae, opt, x, 0.1, rng, true);
    if (step == 4) early = b.total;
    if (step == 49) late = b.total;
  }
  CHECK(late < early);
}

TEST_CASE("pretraining smoke: report, checkpoint, log, resume, determinism") {
  const World& w = world();
  const TrainConfig cfg = tiny_train_config("cvae", kRoot / "runs_a");
  const TrainReport rep = pretrain_clean_vae(cfg, w.data.train, w.data.val);
  CHECK(!rep.diverged);
  REQUIRE(rep.epochs.size() == 2);
  CHECK(rep.best_epoch >= 0);
  CHECK(fs::exists(rep.checkpoint_path));
  CHECK(fs::exists(rep.log_path));
  for (const EpochStats& e : rep.epochs) {
    CHECK(std::isfinite(e.train.total));
    CHECK(std::isfinite(e.validation.total));
  }

  // Same seed, fresh run: identical losses and byte-identical weights.
  TrainConfig cfg_b = cfg;
  cfg_b.out_dir = (kRoot / "runs_b").string();
  const TrainReport rep_b = pretrain_clean_vae(cfg_b, w.data.train, w.data.val);
  CHECK(rep_b.epochs[0].train.total == rep.epochs[0].train.total);
  CHECK(rep_b.epochs[0].validation.total == rep.epochs[0].validation.total);
  CHECK(slurp(rep_b.checkpoint_path) == slurp(rep.checkpoint_path));

  // max_epochs = 0 with an init checkpoint is a no-op resume.
  TrainConfig cfg_c = cfg;
  cfg_c.out_dir = (kRoot / "runs_c").string();
  cfg_c.max_epochs = 0;
  cfg_c.init_ckpt = rep.checkpoint_path;
  const TrainReport rep_c = pretrain_clean_vae(cfg_c, w.data.train, w.data.val);
  CHECK(rep_c.epochs.empty());
  const auto orig = load_tensors(rep.checkpoint_path);
  const auto resumed = load_tensors(rep_c.checkpoint_path);
  REQUIRE(orig.size() == resumed.size());
  for (const auto& [name, m] : orig) {
    REQUIRE(resumed.count(name) == 1);
    CHECK((m.array() == resumed.at(name).array()).all());
  }

  const LoadedVae loaded = load_vae_checkpoint(rep.checkpoint_path);
  CHECK(loaded.meta.model == "cvae");
  CHECK(loaded.meta.trained);
  CHECK(loaded.meta.config_hash == config_hash(cfg));
}

TEST_CASE("nsvae smoke trains against frozen teachers, both regimes") {
  const World& w = world();
  const TrainConfig base = tiny_train_config("cvae", kRoot / "runs_t");
  const TrainReport cv = pretrain_clean_vae(base, w.data.train, w.data.val);
  TrainConfig ncfg = base;
  ncfg.stage = "nvae";
  const TrainReport nv = pretrain_noise_vae(ncfg, w.data.train, w.data.val);

  TrainConfig scfg = base;
  scfg.stage = "nsvae";
  scfg.cvae_ckpt = cv.checkpoint_path;
  scfg.nvae_ckpt = nv.checkpoint_path;
  apply_gamma(scfg, "2");
  const TrainReport pvae = train_nsvae(scfg, w.data.train, w.data.val);
  CHECK(!pvae.diverged);
  CHECK(fs::exists(pvae.checkpoint_path));

  TrainConfig icfg = scfg;
  apply_gamma(icfg, "inf");
  icfg.run_name = "nsvae_inf";
  const TrainReport lat = train_nsvae(icfg, w.data.train, w.data.val);
  CHECK(!lat.diverged);

  // gamma = inf drops the student decoder: exactly the decoder params fewer.
  const long with_dec = checkpoint_param_count(pvae.checkpoint_path);
  const long without = checkpoint_param_count(lat.checkpoint_path);
  DecoderSpec ds = mini_dec(2 * scfg.latent_dim, scfg.num_bins);
  ds.conv_channels = scfg.dec_channels;
  CHECK(with_dec - without == param_count(ds));

  const LoadedNsVae s = load_nsvae_checkpoint(lat.checkpoint_path);
  CHECK_FALSE(s.model->has_decoder());
  CHECK(s.meta.gamma_label == "inf");

  // KL diagnostic on the trained triple: finite and non-negative.
  const LoadedVae lc = load_vae_checkpoint(cv.checkpoint_path);
  const LoadedVae ln = load_vae_checkpoint(nv.checkpoint_path);
  const KlDiagRecord kd = kl_diagnostic(*s.model, *lc.model, *ln.model,
                                        w.data.val, 64, 32);
  CHECK(std::isfinite(kd.mean_kl_speech));
  CHECK(std::isfinite(kd.mean_kl_noise));
  CHECK(kd.mean_kl_speech >= 0.0);
  CHECK(kd.mean_kl_noise >= 0.0);
}

TEST_CASE("enhancement invariants on arbitrary checkpoints") {
  const int bins = 17, L = 5;
  VaeModel cvae(mini_enc(2, L, bins), mini_dec(L, bins), 31, "cvae");
  VaeModel nvae(mini_enc(2, L, bins), mini_dec(L, bins), 32, "nvae");
  NsVaeModel ns(mini_enc(4, L, bins), std::nullopt, 33, "nsvae");
  cvae.input_stats = unit_stats(bins);
  nvae.input_stats = unit_stats(bins);
  ns.input_stats = unit_stats(bins);
  CheckpointMeta meta;
  meta.model = "nsvae";
  meta.trained = false;

  EnhancementConfig cfg;
  cfg.frame_len = 32;
  cfg.hop_len = 16;

  Rng rng(34);
  for (const Eigen::Index n : {1000, 1001, 777}) {
    Waveform noisy;
    noisy.samples = rng.normal_vector(n);
    noisy.sample_rate = 16000;
    const EnhanceResult r = enhance(noisy, ns, meta, cvae, nvae, cfg);
    CHECK(r.enhanced.size() == n);  // length preserved exactly
    CHECK(r.enhanced.sample_rate == 16000);
    CHECK(r.enhanced.all_finite());
    CHECK(r.diagnostics.untrained_checkpoint);
    CHECK_FALSE(r.diagnostics.silent_input);
    CHECK(r.diagnostics.frames > 0);
    CHECK(r.diagnostics.mask_min >= 0.0);
    CHECK(r.diagnostics.mask_max <= 1.0);
    // Masking never amplifies: allow only overlap-add edge slack.
    CHECK(r.enhanced.samples.squaredNorm() <=
          1.02 * noisy.samples.squaredNorm());
  }

  Waveform silent;
  silent.samples = Eigen::VectorXd::Zero(800);
  silent.sample_rate = 16000;
  const EnhanceResult s = enhance(silent, ns, meta, cvae, nvae, cfg);
  CHECK(s.diagnostics.silent_input);
  CHECK(s.enhanced.size() == 800);
  CHECK(s.enhanced.samples.isZero(0.0));

  // mask_floor = 1 forces the all-ones mask: output is the noisy interior.
  EnhancementConfig identity = cfg;
  identity.mask_floor = 1.0;
  Waveform noisy;
  noisy.samples = rng.normal_vector(2000);
  noisy.sample_rate = 16000;
  const EnhanceResult id = enhance(noisy, ns, meta, cvae, nvae, identity);
  const Eigen::Index skip = 32;
  const double err = (id.enhanced.samples.segment(skip, 2000 - 2 * skip) -
                      noisy.samples.segment(skip, 2000 - 2 * skip))
                         .cwiseAbs()
                         .maxCoeff();
  CHECK(err <= 1e-6 * noisy.samples.cwiseAbs().maxCoeff());

  const std::string js = id.diagnostics.to_json();
  const auto parsed = nlohmann::json::parse(js);
  CHECK(parsed["frames"].get<int>() == id.diagnostics.frames);

  // Oracle path shares the invariants.
  Waveform speech, noise;
  speech.samples = rng.normal_vector(1500);
  speech.sample_rate = 16000;
  noise.samples = 0.3 * rng.normal_vector(1500);
  noise.sample_rate = 16000;
  const EnhanceResult orc =
      enhance_oracle(speech, noise, cvae, nvae, meta, meta, cfg);
  CHECK(orc.enhanced.size() == 1500);
  CHECK(orc.enhanced.all_finite());
  CHECK_THROWS(enhance_oracle(speech, silent, cvae, nvae, meta, meta, cfg));
}

TEST_CASE("evaluate_pairs + eval reports render n/a PESQ deterministically") {
  ::unsetenv(kPesqEnv);
  const World& w = world();
  const fs::path dir = kRoot / "eval";
  fs::create_directories(dir);

  const Waveform a = read_wav(w.corpus.speech_files[0]);
  Waveform degraded = a;
  Rng rng(40);
  const double rms = std::sqrt(a.samples.squaredNorm() / a.size());
  degraded.samples += 0.05 * rms * rng.normal_vector(a.size());
  write_wav((dir / "deg.wav").string(), degraded);

  {
    std::ofstream pairs(dir / "pairs.jsonl");
    pairs << nlohmann::json{{"utterance_id", "clean"},
                            {"reference", w.corpus.speech_files[0]},
                            {"estimate", w.corpus.speech_files[0]}}
          << "\n";
    pairs << nlohmann::json{{"utterance_id", "degraded"},
                            {"reference", w.corpus.speech_files[0]},
                            {"estimate", (dir / "deg.wav").string()}}
          << "\n";
  }
  const auto records = evaluate_pairs((dir / "pairs.jsonl").string());
  REQUIRE(records.size() == 2);
  CHECK(records[0].utterance_id == "clean");
  CHECK(records[0].si_sdr_db == 60.0);
  CHECK(records[0].stoi >= 0.999);
  CHECK(records[1].si_sdr_db < 40.0);
  CHECK(records[1].si_sdr_db > 0.0);
  CHECK_FALSE(records[0].pesq.has_value());
  CHECK_THROWS(evaluate_pairs((dir / "missing.jsonl").string()));

  write_eval_csv((dir / "report.csv").string(), records);
  const std::string csv = slurp(dir / "report.csv");
  CHECK(csv.find("utterance_id,si_sdr_db,stoi,pesq") == 0);
  CHECK(csv.find("n/a") != std::string::npos);
  write_eval_csv((dir / "report2.csv").string(), records);
  CHECK(slurp(dir / "report2.csv") == csv);

  write_eval_aggregate_json((dir / "agg.json").string(), records);
  const auto agg = nlohmann::json::parse(slurp(dir / "agg.json"));
  CHECK(agg["si_sdr_db"]["n"].get<long>() == 2);
  CHECK(agg["pesq"].is_null());
}

#ifdef BPVAE_CLI_PATH
TEST_CASE("command-line interface end to end") {
  const std::string cli = BPVAE_CLI_PATH;
  const fs::path dir = kRoot / "cli";
  fs::create_directories(dir);
  auto run = [&](const std::string& args) {
    const std::string cmd =
        cli + " " + args + " > " + (dir / "stdout.log").string() + " 2>&1";
    return std::system(cmd.c_str());
  };

  CHECK(run("definitely-not-a-subcommand") != 0);
  CHECK(run("train-cvae") != 0);  // missing required manifests
  CHECK(run("--help") == 0);

  CHECK(run("synth-data --out " + (dir / "corpus").string() +
            " --speakers 3 --utterances 1 --noise-files 3"
            " --utt-seconds-min 0.7 --utt-seconds-max 0.8"
            " --noise-seconds 1.5 --seed 5") == 0);
  CHECK(fs::exists(dir / "corpus" / "speech"));

  CHECK(run("mix --speech-dir " + (dir / "corpus" / "speech").string() +
            " --noise-dir " + (dir / "corpus" / "noise").string() +
            " --out-dir " + (dir / "data").string() +
            " --snr-min -5 --snr-max 5 --seed 5") == 0);
  CHECK(fs::exists(dir / "data" / "train.jsonl"));
  CHECK(fs::exists(dir / "data" / "validation.jsonl"));
  CHECK(fs::exists(dir / "data" / "test.jsonl"));

  const std::string prof =
      " --enc-channels 3,4 --dec-channels 4,3 --latent-dim 6"
      " --frame-len 64 --hop-len 32 --bins 33 --batch-size 64 --seed 5";
  CHECK(run("train-cvae --train " + (dir / "data" / "train.jsonl").string() +
            " --val " + (dir / "data" / "validation.jsonl").string() +
            " --out-dir " + (dir / "runs").string() + " --max-epochs 1" +
            prof) == 0);
  CHECK(fs::exists(dir / "runs" / "cvae.ckpt"));

  // Evaluate a trivial pair set through the CLI.
  const World& w = world();
  {
    std::ofstream pairs(dir / "pairs.jsonl");
    for (int i = 0; i < 2; i++)
      pairs << nlohmann::json{{"utterance_id", "p" + std::to_string(i)},
                              {"reference", w.corpus.speech_files[i]},
                              {"estimate", w.corpus.speech_files[i]}}
            << "\n";
  }
  CHECK(run("evaluate --pairs " + (dir / "pairs.jsonl").string() + " --out " +
            (dir / "report.csv").string()) == 0);
  CHECK(fs::exists(dir / "report.csv"));
  CHECK(fs::exists(dir / "report_aggregate.json"));
}
#endif
