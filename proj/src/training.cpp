// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bpvae/training.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace bpvae {

namespace {

using nlohmann::json;

const DiagonalGaussian& standard_prior(Eigen::Index dim) {
  static DiagonalGaussian prior = DiagonalGaussian::standard(dim);
  if (prior.dim() != dim) prior = DiagonalGaussian::standard(dim);
  return prior;
}

Eigen::MatrixXd gather(const Eigen::MatrixXd& m,
                       const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (size_t j = 0; j < idx.size(); j++) out.col(j) = m.col(idx[j]);
  return out;
}

GaussianBatch gather(const GaussianBatch& g,
                     const std::vector<Eigen::Index>& idx) {
  return GaussianBatch{gather(g.mean, idx), gather(g.log_var, idx)};
}

void log_line(std::ofstream& os, long step, int epoch, const char* phase,
              const LossBreakdown& b) {
  json j{{"step", step},
         {"epoch", epoch},
         {"phase", phase},
         {"total", b.total},
         {"kl_speech", b.kl_speech},
         {"kl_noise", b.kl_noise},
         {"latent_ratio_speech", b.latent_ratio_speech},
         {"latent_ratio_noise", b.latent_ratio_noise},
         {"reconstruction", b.reconstruction},
         {"alpha", b.alpha},
         {"beta", b.beta}};
  os << j.dump() << "\n";
}

struct BreakdownAccum {
  LossBreakdown sum;
  double weight = 0.0;

  void add(const LossBreakdown& b, double w) {
    sum.total += w * b.total;
    sum.kl_speech += w * b.kl_speech;
    sum.kl_noise += w * b.kl_noise;
    sum.latent_ratio_speech += w * b.latent_ratio_speech;
    sum.latent_ratio_noise += w * b.latent_ratio_noise;
    sum.reconstruction += w * b.reconstruction;
    sum.alpha = b.alpha;
    sum.beta = b.beta;
    weight += w;
  }

  LossBreakdown mean() const {
    LossBreakdown b = sum;
    const double inv = weight > 0.0 ? 1.0 / weight : 0.0;
    b.total *= inv;
    b.kl_speech *= inv;
    b.kl_noise *= inv;
    b.latent_ratio_speech *= inv;
    b.latent_ratio_noise *= inv;
    b.reconstruction *= inv;
    return b;
  }
};

std::vector<std::vector<Eigen::Index>> make_batches(
    const std::vector<Eigen::Index>& order, int batch_size) {
  std::vector<std::vector<Eigen::Index>> out;
  for (size_t at = 0; at < order.size(); at += batch_size) {
    const size_t n = std::min<size_t>(batch_size, order.size() - at);
    out.emplace_back(order.begin() + at, order.begin() + at + n);
  }
  return out;
}

// Shared epoch driver: shuffled train batches, sequential validation,
// early stopping with lr halving, divergence abort, best-checkpoint saves.
TrainReport run_epochs(
    const TrainConfig& cfg, Eigen::Index n_train, Eigen::Index n_val,
    const std::function<LossBreakdown(const std::vector<Eigen::Index>&, Rng&,
                                      bool)>& step,
    const std::function<void(bool trained)>& save_best,
    const std::string& log_path, nn::Adam& opt, bool base_trained) {
  TrainReport report;
  report.log_path = log_path;
  std::ofstream log(log_path);
  if (!log) throw std::runtime_error("cannot write training log: " + log_path);

  std::vector<Eigen::Index> train_idx(n_train), val_idx(n_val);
  std::iota(train_idx.begin(), train_idx.end(), 0);
  std::iota(val_idx.begin(), val_idx.end(), 0);

  // A checkpoint exists from step zero, so a divergence abort always
  // leaves the last good weights on disk.
  save_best(base_trained);
  if (cfg.max_epochs <= 0) return report;

  Rng root(cfg.seed);
  long step_no = 0;
  int bad_epochs = 0;
  for (int epoch = 0; epoch < cfg.max_epochs; epoch++) {
    Rng erng = root.fork("epoch" + std::to_string(epoch));
    erng.shuffle(train_idx);

    BreakdownAccum train_acc;
    for (const auto& batch : make_batches(train_idx, cfg.batch_size)) {
      LossBreakdown b;
      try {
        b = step(batch, erng, true);
      } catch (const std::runtime_error&) {
        report.diverged = true;
        return report;
      }
      log_line(log, step_no++, epoch, "train", b);
      if (!std::isfinite(b.total)) {
        report.diverged = true;
        return report;
      }
      train_acc.add(b, static_cast<double>(batch.size()));
    }

    BreakdownAccum val_acc;
    Rng vrng = root.fork("val" + std::to_string(epoch));
    for (const auto& batch : make_batches(val_idx, cfg.batch_size))
      val_acc.add(step(batch, vrng, false), static_cast<double>(batch.size()));

    EpochStats stats;
    stats.epoch = epoch;
    stats.train = train_acc.mean();
    stats.validation = val_acc.mean();
    stats.lr = opt.lr();
    log_line(log, step_no, epoch, "validation", stats.validation);
    report.epochs.push_back(stats);

    const double val_total = stats.validation.total;
    if (report.best_epoch < 0 || val_total < report.best_val_total) {
      report.best_epoch = epoch;
      report.best_val_total = val_total;
      bad_epochs = 0;
      save_best(true);
    } else {
      bad_epochs++;
      if (cfg.lr_patience > 0 && bad_epochs % cfg.lr_patience == 0)
        opt.set_lr(opt.lr() * 0.5);
      if (bad_epochs >= cfg.patience) break;
    }
  }
  return report;
}

// Chunked full-dataset encoding under frozen weights.
GaussianBatch encode_all(VaeModel& model, const Eigen::MatrixXd& frames,
                         Eigen::Index chunk = 512) {
  GaussianBatch out;
  out.mean.resize(model.encoder().spec().latent_dim, frames.cols());
  out.log_var.resize(model.encoder().spec().latent_dim, frames.cols());
  for (Eigen::Index at = 0; at < frames.cols(); at += chunk) {
    const Eigen::Index n = std::min(chunk, frames.cols() - at);
    const GaussianBatch g = model.encode(frames.middleCols(at, n));
    out.mean.middleCols(at, n) = g.mean;
    out.log_var.middleCols(at, n) = g.log_var;
  }
  return out;
}

EncoderSpec encoder_spec_from(const TrainConfig& cfg, int num_heads) {
  EncoderSpec s;
  s.conv_channels = cfg.enc_channels;
  s.kernel = 3;
  s.latent_dim = cfg.latent_dim;
  s.num_heads = num_heads;
  s.input_bins = cfg.num_bins;
  return s;
}

DecoderSpec decoder_spec_from(const TrainConfig& cfg, int latent_dim) {
  DecoderSpec s;
  s.conv_channels = cfg.dec_channels;
  s.kernel = 3;
  s.out_dim = cfg.num_bins;
  s.num_heads = 2;
  s.latent_dim = latent_dim;
  return s;
}

CheckpointMeta make_meta(const TrainConfig& cfg, const std::string& model,
                         bool trained) {
  CheckpointMeta meta;
  meta.model = model;
  meta.gamma_label = cfg.gamma_label;
  meta.alpha = cfg.alpha;
  meta.beta = cfg.beta;
  meta.seed = cfg.seed;
  meta.config_hash = config_hash(cfg);
  meta.trained = trained;
  return meta;
}

TrainReport pretrain_vae(const TrainConfig& cfg, const char* model_kind,
                         const std::vector<MixtureSpec>& train_manifest,
                         const std::vector<MixtureSpec>& val_manifest,
                         bool use_noise_column) {
  const FrameTriples train = load_frame_triples(train_manifest, cfg.frame_len,
                                                cfg.hop_len, cfg.lps_floor);
  const FrameTriples val = load_frame_triples(val_manifest, cfg.frame_len,
                                              cfg.hop_len, cfg.lps_floor);
  const Eigen::MatrixXd& train_raw = use_noise_column ? train.noise : train.speech;
  const Eigen::MatrixXd& val_raw = use_noise_column ? val.noise : val.speech;

  VaeModel model(encoder_spec_from(cfg, 2), decoder_spec_from(cfg, cfg.latent_dim),
                 cfg.seed, model_kind);
  bool base_trained = false;
  if (!cfg.init_ckpt.empty()) {
    LoadedVae init = load_vae_checkpoint(cfg.init_ckpt);
    model.input_stats = init.model->input_stats;
    auto dst = model.params();
    auto src = init.model->params();
    for (size_t i = 0; i < dst.size(); i++) dst[i]->value = src[i]->value;
    base_trained = init.meta.trained;
  } else {
    model.input_stats = compute_feature_stats(train_raw);
  }
  const Eigen::MatrixXd x_train = model.input_stats.normalize(train_raw);
  const Eigen::MatrixXd x_val = model.input_stats.normalize(val_raw);

  nn::Adam opt(model.params(),
               {cfg.lr, cfg.adam_beta1, cfg.adam_beta2, 1e-8});

  std::filesystem::create_directories(cfg.out_dir);
  const std::string base = cfg.run_name.empty() ? model_kind : cfg.run_name;
  const std::string ckpt = cfg.out_dir + "/" + base + ".ckpt";
  const std::string log = cfg.out_dir + "/" + base + "_train.jsonl";

  auto step = [&](const std::vector<Eigen::Index>& idx, Rng& rng,
                  bool update) -> LossBreakdown {
    const Eigen::MatrixXd batch = gather(update ? x_train : x_val, idx);
    if (update) return vae_train_step(model, opt, batch, cfg.beta, rng, true);
    return vae_objective(model, batch, cfg.beta,
                         Eigen::MatrixXd::Zero(cfg.latent_dim, batch.cols()),
                         false);
  };
  auto save_best = [&](bool trained) {
    save_checkpoint(ckpt, model, make_meta(cfg, model_kind, trained));
  };

  TrainReport report = run_epochs(cfg, x_train.cols(), x_val.cols(), step,
                                  save_best, log, opt, base_trained);
  report.checkpoint_path = ckpt;
  return report;
}

}  // namespace

// The (beta-)VAE objective with explicit reparameterization noise;
// do_backward accumulates parameter gradients.
LossBreakdown vae_objective(VaeModel& model, const Eigen::MatrixXd& x,
                            double beta, const Eigen::MatrixXd& eps,
                            bool do_backward) {
  const GaussianBatch post = model.encode(x);
  const Eigen::MatrixXd z = sample_batch(post, eps);
  const GaussianBatch lik = model.decode(z);
  const DiagonalGaussian& prior = standard_prior(post.dim());

  const BatchTermGrad kl_term = kl_mean_grad(post, prior);
  const BatchTermGrad lp = log_pdf_mean_grad(lik, x);

  LossBreakdown b;
  b.alpha = 1.0;
  b.beta = beta;
  b.kl_speech = kl_term.value;
  b.reconstruction = lp.value;
  b.total = beta * kl_term.value - lp.value;

  if (do_backward) {
    const Eigen::MatrixXd d_z =
        model.decode_backward(-lp.d_mean, -lp.d_log_var);
    Eigen::MatrixXd d_mean = beta * kl_term.d_mean;
    Eigen::MatrixXd d_log_var = beta * kl_term.d_log_var;
    sample_batch_backward(post, eps, d_z, d_mean, d_log_var);
    model.encode_backward(d_mean, d_log_var);
  }
  return b;
}

// Eq. (6)/(7)/(8) objective against frozen teacher posteriors. The
// expectation-ratio terms enter the value only (see LossBreakdown).
LossBreakdown nsvae_objective(NsVaeModel& model, const Eigen::MatrixXd& y,
                              const GaussianBatch& x_teacher,
                              const GaussianBatch& d_teacher, double alpha,
                              double beta, bool sampled,
                              const Eigen::MatrixXd* eps_x,
                              const Eigen::MatrixXd* eps_d,
                              const Eigen::MatrixXd* eps_ratio,
                              bool do_backward) {
  if (alpha < 0.0 || beta < 0.0 || (alpha == 0.0 && beta == 0.0))
    throw std::invalid_argument("nsvae_objective: bad weights");
  auto [py_x, py_d] = model.encode(y);
  const DiagonalGaussian& prior = standard_prior(py_x.dim());

  const BatchTermGrad kl_s = kl_mean_grad(py_x, x_teacher);
  const BatchTermGrad kl_n = kl_mean_grad(py_d, d_teacher);

  LossBreakdown b;
  b.alpha = alpha;
  b.beta = beta;
  b.kl_speech = kl_s.value;
  b.kl_noise = kl_n.value;
  b.latent_ratio_speech =
      ratio_mean(py_x, x_teacher, prior, sampled ? eps_ratio : nullptr);
  b.latent_ratio_noise =
      ratio_mean(py_d, d_teacher, prior, sampled ? eps_ratio : nullptr);

  Eigen::MatrixXd d_mean_x = beta * kl_s.d_mean;
  Eigen::MatrixXd d_log_var_x = beta * kl_s.d_log_var;
  Eigen::MatrixXd d_mean_d = beta * kl_n.d_mean;
  Eigen::MatrixXd d_log_var_d = beta * kl_n.d_log_var;

  if (alpha > 0.0) {
    if (!model.has_decoder())
      throw std::invalid_argument("nsvae_objective: alpha > 0 needs a decoder");
    const Eigen::Index L = py_x.dim(), B = py_x.batch();
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(L, B);
    const Eigen::MatrixXd& ex = eps_x ? *eps_x : zero;
    const Eigen::MatrixXd& ed = eps_d ? *eps_d : zero;
    Eigen::MatrixXd z(2 * L, B);
    z.topRows(L) = sample_batch(py_x, ex);
    z.bottomRows(L) = sample_batch(py_d, ed);
    const GaussianBatch lik = model.decode(z);
    const BatchTermGrad lp = log_pdf_mean_grad(lik, y);
    b.reconstruction = lp.value;
    if (do_backward) {
      const Eigen::MatrixXd d_z =
          model.decode_backward(-alpha * lp.d_mean, -alpha * lp.d_log_var);
      sample_batch_backward(py_x, ex, d_z.topRows(L), d_mean_x, d_log_var_x);
      sample_batch_backward(py_d, ed, d_z.bottomRows(L), d_mean_d, d_log_var_d);
    }
  }

  b.total = beta * (b.kl_speech + b.latent_ratio_speech + b.kl_noise +
                    b.latent_ratio_noise) -
            alpha * b.reconstruction;
  if (do_backward)
    model.encode_backward(GaussianBatch{d_mean_x, d_log_var_x},
                          GaussianBatch{d_mean_d, d_log_var_d});
  return b;
}

void apply_gamma(TrainConfig& cfg, const std::string& label) {
  cfg.gamma_label = label;
  if (label == "inf") {
    cfg.alpha = 0.0;
    cfg.beta = 1.0;
    return;
  }
  size_t used = 0;
  const double g = std::stod(label, &used);
  if (used != label.size() || !(g > 0.0))
    throw std::invalid_argument("gamma must be a positive number or 'inf'");
  cfg.alpha = 1.0;
  cfg.beta = g;
}

std::string config_hash(const TrainConfig& cfg) {
  std::ostringstream ss;
  ss << cfg.stage << '|' << cfg.alpha << '|' << cfg.beta << '|' << cfg.lr << '|'
     << cfg.adam_beta1 << '|' << cfg.adam_beta2 << '|' << cfg.batch_size << '|'
     << cfg.max_epochs << '|' << cfg.patience << '|' << cfg.lr_patience << '|'
     << cfg.seed << '|' << cfg.latent_dim << '|' << cfg.num_bins << '|'
     << cfg.frame_len << '|' << cfg.hop_len << '|' << cfg.sampled_expectations;
  for (int c : cfg.enc_channels) ss << ",e" << c;
  for (int c : cfg.dec_channels) ss << ",d" << c;
  const std::string s = ss.str();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : s) h = (h ^ static_cast<std::uint64_t>(c)) * 0x100000001b3ull;
  std::ostringstream hex;
  hex << std::hex << h;
  return hex.str();
}

LossBreakdown vae_train_step(VaeModel& model, nn::Adam& opt,
                             const Eigen::MatrixXd& x_norm, double beta,
                             Rng& rng, bool update) {
  if (!update) {
    return vae_objective(
        model, x_norm, beta,
        Eigen::MatrixXd::Zero(model.encoder().spec().latent_dim, x_norm.cols()),
        false);
  }
  opt.zero_grad();
  const Eigen::MatrixXd eps =
      rng.normal_matrix(model.encoder().spec().latent_dim, x_norm.cols());
  const LossBreakdown b = vae_objective(model, x_norm, beta, eps, true);
  opt.step();
  return b;
}

LossBreakdown nsvae_train_step(NsVaeModel& model, nn::Adam& opt,
                               const Eigen::MatrixXd& y_norm,
                               const GaussianBatch& x_teacher,
                               const GaussianBatch& d_teacher, double alpha,
                               double beta, bool sampled_expectations,
                               Rng& rng, bool update) {
  const Eigen::Index L = model.encoder().spec().latent_dim;
  if (!update) {
    return nsvae_objective(model, y_norm, x_teacher, d_teacher, alpha, beta,
                           sampled_expectations, nullptr, nullptr, nullptr,
                           false);
  }
  opt.zero_grad();
  const Eigen::MatrixXd eps_x = rng.normal_matrix(L, y_norm.cols());
  const Eigen::MatrixXd eps_d = rng.normal_matrix(L, y_norm.cols());
  Eigen::MatrixXd eps_ratio;
  if (sampled_expectations) eps_ratio = rng.normal_matrix(L, y_norm.cols());
  const LossBreakdown b = nsvae_objective(
      model, y_norm, x_teacher, d_teacher, alpha, beta, sampled_expectations,
      &eps_x, &eps_d, sampled_expectations ? &eps_ratio : nullptr, true);
  opt.step();
  return b;
}

TrainReport pretrain_clean_vae(const TrainConfig& cfg,
                               const std::vector<MixtureSpec>& train_manifest,
                               const std::vector<MixtureSpec>& val_manifest) {
  return pretrain_vae(cfg, "cvae", train_manifest, val_manifest, false);
}

TrainReport pretrain_noise_vae(const TrainConfig& cfg,
                               const std::vector<MixtureSpec>& train_manifest,
                               const std::vector<MixtureSpec>& val_manifest) {
  return pretrain_vae(cfg, "nvae", train_manifest, val_manifest, true);
}

TrainReport train_nsvae(const TrainConfig& cfg,
                        const std::vector<MixtureSpec>& train_manifest,
                        const std::vector<MixtureSpec>& val_manifest) {
  if (cfg.cvae_ckpt.empty() || cfg.nvae_ckpt.empty())
    throw std::invalid_argument("train_nsvae: teacher checkpoints required");
  LoadedVae cvae = load_vae_checkpoint(cfg.cvae_ckpt);
  LoadedVae nvae = load_vae_checkpoint(cfg.nvae_ckpt);
  if (cvae.meta.model != "cvae" || nvae.meta.model != "nvae")
    throw std::runtime_error("train_nsvae: teacher checkpoints swapped or wrong");
  if (cvae.model->encoder().spec().latent_dim !=
      nvae.model->encoder().spec().latent_dim)
    throw std::runtime_error("train_nsvae: teacher latent dims differ");

  const FrameTriples train = load_frame_triples(train_manifest, cfg.frame_len,
                                                cfg.hop_len, cfg.lps_floor);
  const FrameTriples val = load_frame_triples(val_manifest, cfg.frame_len,
                                              cfg.hop_len, cfg.lps_floor);

  // Teacher posteriors are computed once; the teachers stay frozen.
  const GaussianBatch xt_train = encode_all(
      *cvae.model, cvae.model->input_stats.normalize(train.speech));
  const GaussianBatch dt_train =
      encode_all(*nvae.model, nvae.model->input_stats.normalize(train.noise));
  const GaussianBatch xt_val =
      encode_all(*cvae.model, cvae.model->input_stats.normalize(val.speech));
  const GaussianBatch dt_val =
      encode_all(*nvae.model, nvae.model->input_stats.normalize(val.noise));

  const bool with_decoder = cfg.alpha > 0.0;
  std::optional<DecoderSpec> dec;
  if (with_decoder) dec = decoder_spec_from(cfg, 2 * cfg.latent_dim);
  NsVaeModel model(encoder_spec_from(cfg, 4), dec, cfg.seed, "nsvae");

  bool base_trained = false;
  if (!cfg.init_ckpt.empty()) {
    LoadedNsVae init = load_nsvae_checkpoint(cfg.init_ckpt);
    model.input_stats = init.model->input_stats;
    auto dst = model.params();
    auto src = init.model->params();
    if (dst.size() != src.size())
      throw std::runtime_error("train_nsvae: resume checkpoint shape mismatch");
    for (size_t i = 0; i < dst.size(); i++) dst[i]->value = src[i]->value;
    base_trained = init.meta.trained;
  } else {
    model.input_stats = compute_feature_stats(train.noisy);
  }
  const Eigen::MatrixXd y_train = model.input_stats.normalize(train.noisy);
  const Eigen::MatrixXd y_val = model.input_stats.normalize(val.noisy);

  nn::Adam opt(model.params(), {cfg.lr, cfg.adam_beta1, cfg.adam_beta2, 1e-8});

  std::filesystem::create_directories(cfg.out_dir);
  const std::string base =
      cfg.run_name.empty() ? "nsvae_gamma" + cfg.gamma_label : cfg.run_name;
  const std::string ckpt = cfg.out_dir + "/" + base + ".ckpt";
  const std::string log = cfg.out_dir + "/" + base + "_train.jsonl";

  auto step = [&](const std::vector<Eigen::Index>& idx, Rng& rng,
                  bool update) -> LossBreakdown {
    const Eigen::MatrixXd y = gather(update ? y_train : y_val, idx);
    const GaussianBatch xt = gather(update ? xt_train : xt_val, idx);
    const GaussianBatch dt = gather(update ? dt_train : dt_val, idx);
    return nsvae_train_step(model, opt, y, xt, dt, cfg.alpha, cfg.beta,
                            cfg.sampled_expectations, rng, update);
  };
  auto save_best = [&](bool trained) {
    save_checkpoint(ckpt, model, make_meta(cfg, "nsvae", trained));
  };

  TrainReport report = run_epochs(cfg, y_train.cols(), y_val.cols(), step,
                                  save_best, log, opt, base_trained);
  report.checkpoint_path = ckpt;
  return report;
}

}  // namespace bpvae
