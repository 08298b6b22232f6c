// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bpvae/networks.hpp"

#include <stdexcept>

namespace bpvae {

namespace {

void check_spec(const EncoderSpec& s) {
  if (s.conv_channels.empty() || s.latent_dim <= 0 || s.input_bins <= 0)
    throw std::invalid_argument("EncoderSpec: empty or non-positive fields");
  if (s.num_heads != 2 && s.num_heads != 4)
    throw std::invalid_argument("EncoderSpec: num_heads must be 2 or 4");
}

void check_spec(const DecoderSpec& s) {
  if (s.conv_channels.empty() || s.latent_dim <= 0 || s.out_dim <= 0)
    throw std::invalid_argument("DecoderSpec: empty or non-positive fields");
  if (s.num_heads != 2)
    throw std::invalid_argument("DecoderSpec: num_heads must be 2");
}

}  // namespace

long param_count(const EncoderSpec& spec) {
  if (spec.conv_channels.empty()) return 0;
  long n = 0;
  long cin = 1;
  for (int c : spec.conv_channels) {
    n += static_cast<long>(c) * (cin * spec.kernel + 1);
    cin = c;
  }
  const long flat = cin * spec.input_bins;
  n += static_cast<long>(spec.num_heads) * (flat * spec.latent_dim + spec.latent_dim);
  return n;
}

long param_count(const DecoderSpec& spec) {
  if (spec.conv_channels.empty()) return 0;
  long n = 0;
  // input projection z -> [c0 x out_dim]
  const long c0 = spec.conv_channels.front();
  n += c0 * spec.out_dim * (spec.latent_dim + 1);
  long cin = c0;
  for (size_t i = 1; i < spec.conv_channels.size(); i++) {
    const long c = spec.conv_channels[i];
    n += c * (cin * spec.kernel + 1);
    cin = c;
  }
  const long flat = cin * spec.out_dim;
  n += static_cast<long>(spec.num_heads) * (flat * spec.out_dim + spec.out_dim);
  return n;
}

Encoder::Encoder(EncoderSpec spec, Rng& rng, const std::string& name)
    : spec_(std::move(spec)) {
  check_spec(spec_);
  int cin = 1;
  for (size_t i = 0; i < spec_.conv_channels.size(); i++) {
    const int c = spec_.conv_channels[i];
    trunk_.emplace<nn::Conv1d>(cin, c, spec_.kernel, spec_.input_bins, rng,
                               name + ".conv" + std::to_string(i));
    trunk_.emplace<nn::Relu>();
    cin = c;
  }
  const Eigen::Index flat =
      static_cast<Eigen::Index>(cin) * spec_.input_bins;
  for (int h = 0; h < spec_.num_heads; h++)
    heads_.push_back(std::make_unique<nn::Dense>(
        flat, spec_.latent_dim, rng, name + ".head" + std::to_string(h),
        kHeadInitScale));
}

std::vector<Eigen::MatrixXd> Encoder::forward(const Eigen::MatrixXd& x) {
  if (x.rows() != spec_.input_bins)
    throw std::invalid_argument("Encoder: input must have " +
                                std::to_string(spec_.input_bins) + " bins");
  const Eigen::MatrixXd h = trunk_.forward(x);
  std::vector<Eigen::MatrixXd> out;
  out.reserve(heads_.size());
  for (auto& head : heads_) out.push_back(head->forward(h));
  return out;
}

Eigen::MatrixXd Encoder::backward(
    const std::vector<Eigen::MatrixXd>& head_grads) {
  if (head_grads.size() != heads_.size())
    throw std::invalid_argument("Encoder: head gradient count mismatch");
  Eigen::MatrixXd g_trunk = heads_[0]->backward(head_grads[0]);
  for (size_t i = 1; i < heads_.size(); i++)
    g_trunk += heads_[i]->backward(head_grads[i]);
  return trunk_.backward(g_trunk);
}

std::vector<nn::Tensor*> Encoder::params() {
  std::vector<nn::Tensor*> out = trunk_.params();
  for (auto& head : heads_)
    for (nn::Tensor* t : head->params()) out.push_back(t);
  return out;
}

Decoder::Decoder(DecoderSpec spec, Rng& rng, const std::string& name)
    : spec_(std::move(spec)) {
  check_spec(spec_);
  const int c0 = spec_.conv_channels.front();
  trunk_.emplace<nn::Dense>(spec_.latent_dim,
                            static_cast<Eigen::Index>(c0) * spec_.out_dim, rng,
                            name + ".proj");
  trunk_.emplace<nn::Relu>();
  int cin = c0;
  for (size_t i = 1; i < spec_.conv_channels.size(); i++) {
    const int c = spec_.conv_channels[i];
    trunk_.emplace<nn::Conv1d>(cin, c, spec_.kernel, spec_.out_dim, rng,
                               name + ".conv" + std::to_string(i));
    trunk_.emplace<nn::Relu>();
    cin = c;
  }
  const Eigen::Index flat = static_cast<Eigen::Index>(cin) * spec_.out_dim;
  heads_.push_back(std::make_unique<nn::Dense>(flat, spec_.out_dim, rng,
                                               name + ".mean", kHeadInitScale));
  heads_.push_back(std::make_unique<nn::Dense>(
      flat, spec_.out_dim, rng, name + ".log_var", kHeadInitScale));
}

GaussianBatch Decoder::forward(const Eigen::MatrixXd& z) {
  if (z.rows() != spec_.latent_dim)
    throw std::invalid_argument("Decoder: z must have dimension " +
                                std::to_string(spec_.latent_dim));
  const Eigen::MatrixXd h = trunk_.forward(z);
  log_var_cache_ = squash_log_var(heads_[1]->forward(h));
  return GaussianBatch{heads_[0]->forward(h), log_var_cache_};
}

Eigen::MatrixXd Decoder::backward(const Eigen::MatrixXd& grad_mean,
                                  const Eigen::MatrixXd& grad_log_var) {
  Eigen::MatrixXd g = heads_[0]->backward(grad_mean);
  g += heads_[1]->backward(
      squash_log_var_backward(grad_log_var, log_var_cache_));
  return trunk_.backward(g);
}

std::vector<nn::Tensor*> Decoder::params() {
  std::vector<nn::Tensor*> out = trunk_.params();
  for (auto& head : heads_)
    for (nn::Tensor* t : head->params()) out.push_back(t);
  return out;
}

VaeModel::VaeModel(EncoderSpec enc_spec, DecoderSpec dec_spec, uint64_t seed,
                   const std::string& name)
    : name_(name),
      enc_([&] {
        Rng rng(seed);
        return Encoder(std::move(enc_spec), rng, name + ".enc");
      }()),
      dec_([&] {
        Rng rng(seed);
        return Decoder(std::move(dec_spec), rng, name + ".dec");
      }()) {
  if (enc_.spec().num_heads != 2)
    throw std::invalid_argument("VaeModel: encoder must have 2 heads");
}

GaussianBatch VaeModel::encode(const Eigen::MatrixXd& x) {
  auto heads = enc_.forward(x);
  enc_log_var_cache_ = squash_log_var(heads[1]);
  return GaussianBatch{std::move(heads[0]), enc_log_var_cache_};
}

void VaeModel::encode_backward(const Eigen::MatrixXd& grad_mean,
                               const Eigen::MatrixXd& grad_log_var) {
  enc_.backward({grad_mean,
                 squash_log_var_backward(grad_log_var, enc_log_var_cache_)});
}

GaussianBatch VaeModel::decode(const Eigen::MatrixXd& z) {
  return dec_.forward(z);
}

Eigen::MatrixXd VaeModel::decode_backward(const Eigen::MatrixXd& grad_mean,
                                          const Eigen::MatrixXd& grad_log_var) {
  return dec_.backward(grad_mean, grad_log_var);
}

std::vector<nn::Tensor*> VaeModel::params() {
  std::vector<nn::Tensor*> out = enc_.params();
  for (nn::Tensor* t : dec_.params()) out.push_back(t);
  return out;
}

long VaeModel::param_count_total() const {
  return param_count(enc_.spec()) + param_count(dec_.spec());
}

NsVaeModel::NsVaeModel(EncoderSpec enc_spec, std::optional<DecoderSpec> dec_spec,
                       uint64_t seed, const std::string& name)
    : name_(name), enc_([&] {
        Rng rng(seed);
        return Encoder(std::move(enc_spec), rng, name + ".enc");
      }()) {
  if (enc_.spec().num_heads != 4)
    throw std::invalid_argument("NsVaeModel: encoder must have 4 heads");
  if (dec_spec) {
    if (dec_spec->latent_dim != 2 * enc_.spec().latent_dim)
      throw std::invalid_argument(
          "NsVaeModel: decoder latent_dim must be 2x encoder latent_dim");
    Rng rng(seed);
    dec_.emplace(std::move(*dec_spec), rng, name + ".dec");
  }
}

std::pair<GaussianBatch, GaussianBatch> NsVaeModel::encode(
    const Eigen::MatrixXd& y) {
  auto heads = enc_.forward(y);
  enc_log_var_x_cache_ = squash_log_var(heads[1]);
  enc_log_var_d_cache_ = squash_log_var(heads[3]);
  return {GaussianBatch{std::move(heads[0]), enc_log_var_x_cache_},
          GaussianBatch{std::move(heads[2]), enc_log_var_d_cache_}};
}

void NsVaeModel::encode_backward(const GaussianBatch& grad_speech,
                                 const GaussianBatch& grad_noise) {
  enc_.backward(
      {grad_speech.mean,
       squash_log_var_backward(grad_speech.log_var, enc_log_var_x_cache_),
       grad_noise.mean,
       squash_log_var_backward(grad_noise.log_var, enc_log_var_d_cache_)});
}

Decoder& NsVaeModel::decoder() {
  if (!dec_) throw std::logic_error("NsVaeModel: no decoder (alpha = 0 mode)");
  return *dec_;
}

GaussianBatch NsVaeModel::decode(const Eigen::MatrixXd& z) {
  return decoder().forward(z);
}

Eigen::MatrixXd NsVaeModel::decode_backward(
    const Eigen::MatrixXd& grad_mean, const Eigen::MatrixXd& grad_log_var) {
  return decoder().backward(grad_mean, grad_log_var);
}

std::vector<nn::Tensor*> NsVaeModel::params() {
  std::vector<nn::Tensor*> out = enc_.params();
  if (dec_)
    for (nn::Tensor* t : dec_->params()) out.push_back(t);
  return out;
}

long NsVaeModel::param_count_total() const {
  long n = param_count(enc_.spec());
  if (dec_) n += param_count(dec_->spec());
  return n;
}

std::vector<DiagonalGaussian> to_gaussians(const GaussianBatch& batch) {
  std::vector<DiagonalGaussian> out;
  out.reserve(batch.batch());
  for (Eigen::Index j = 0; j < batch.batch(); j++) out.push_back(batch.column(j));
  return out;
}

namespace {

template <typename Fwd>
GaussianBatch run_chunked(const Eigen::MatrixXd& input, Eigen::Index out_dim,
                          Eigen::Index chunk, Fwd&& fwd) {
  GaussianBatch out;
  out.mean.resize(out_dim, input.cols());
  out.log_var.resize(out_dim, input.cols());
  for (Eigen::Index at = 0; at < input.cols(); at += chunk) {
    const Eigen::Index n = std::min(chunk, input.cols() - at);
    const GaussianBatch g = fwd(input.middleCols(at, n));
    out.mean.middleCols(at, n) = g.mean;
    out.log_var.middleCols(at, n) = g.log_var;
  }
  return out;
}

}  // namespace

GaussianBatch encode_chunked(VaeModel& model, const Eigen::MatrixXd& frames,
                             Eigen::Index chunk) {
  return run_chunked(frames, model.encoder().spec().latent_dim, chunk,
                     [&](const Eigen::MatrixXd& x) { return model.encode(x); });
}

std::pair<GaussianBatch, GaussianBatch> encode_chunked(
    NsVaeModel& model, const Eigen::MatrixXd& frames, Eigen::Index chunk) {
  const Eigen::Index dim = model.encoder().spec().latent_dim;
  std::pair<GaussianBatch, GaussianBatch> out;
  auto setup = [&](GaussianBatch& g) {
    g.mean.resize(dim, frames.cols());
    g.log_var.resize(dim, frames.cols());
  };
  setup(out.first);
  setup(out.second);
  for (Eigen::Index at = 0; at < frames.cols(); at += chunk) {
    const Eigen::Index n = std::min(chunk, frames.cols() - at);
    const auto [gx, gd] = model.encode(frames.middleCols(at, n));
    out.first.mean.middleCols(at, n) = gx.mean;
    out.first.log_var.middleCols(at, n) = gx.log_var;
    out.second.mean.middleCols(at, n) = gd.mean;
    out.second.log_var.middleCols(at, n) = gd.log_var;
  }
  return out;
}

GaussianBatch decode_chunked(VaeModel& model, const Eigen::MatrixXd& z,
                             Eigen::Index chunk) {
  return run_chunked(z, model.decoder().spec().out_dim, chunk,
                     [&](const Eigen::MatrixXd& v) { return model.decode(v); });
}

}  // namespace bpvae
