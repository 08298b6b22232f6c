// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bpvae/checkpoint.hpp"

#include <cstdint>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace bpvae {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'B', 'P', 'V', 'T'};

void write_u32(std::ofstream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_u64(std::ofstream& os, uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
uint32_t read_u32(std::ifstream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
uint64_t read_u64(std::ifstream& is) {
  uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

json spec_to_json(const EncoderSpec& s) {
  return json{{"conv_channels", s.conv_channels}, {"kernel", s.kernel},
              {"latent_dim", s.latent_dim},       {"num_heads", s.num_heads},
              {"input_bins", s.input_bins}};
}

json spec_to_json(const DecoderSpec& s) {
  return json{{"conv_channels", s.conv_channels}, {"kernel", s.kernel},
              {"out_dim", s.out_dim},             {"num_heads", s.num_heads},
              {"latent_dim", s.latent_dim}};
}

EncoderSpec encoder_spec_from_json(const json& j) {
  EncoderSpec s;
  s.conv_channels = j.at("conv_channels").get<std::vector<int>>();
  s.kernel = j.at("kernel").get<int>();
  s.latent_dim = j.at("latent_dim").get<int>();
  s.num_heads = j.at("num_heads").get<int>();
  s.input_bins = j.at("input_bins").get<int>();
  return s;
}

DecoderSpec decoder_spec_from_json(const json& j) {
  DecoderSpec s;
  s.conv_channels = j.at("conv_channels").get<std::vector<int>>();
  s.kernel = j.at("kernel").get<int>();
  s.out_dim = j.at("out_dim").get<int>();
  s.num_heads = j.at("num_heads").get<int>();
  s.latent_dim = j.at("latent_dim").get<int>();
  return s;
}

json stats_to_json(const FeatureStats& st) {
  std::vector<double> mean(st.mean.data(), st.mean.data() + st.mean.size());
  std::vector<double> std_dev(st.std.data(), st.std.data() + st.std.size());
  return json{{"mean", mean}, {"std", std_dev}};
}

FeatureStats stats_from_json(const json& j) {
  FeatureStats st;
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto std_dev = j.at("std").get<std::vector<double>>();
  st.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size());
  st.std = Eigen::Map<const Eigen::VectorXd>(std_dev.data(), std_dev.size());
  return st;
}

json meta_to_json(const CheckpointMeta& m) {
  return json{{"schema_version", m.schema_version},
              {"model", m.model},
              {"gamma_label", m.gamma_label},
              {"alpha", m.alpha},
              {"beta", m.beta},
              {"seed", m.seed},
              {"config_hash", m.config_hash},
              {"trained", m.trained}};
}

CheckpointMeta meta_from_json(const json& j) {
  CheckpointMeta m;
  m.schema_version = j.at("schema_version").get<int>();
  m.model = j.at("model").get<std::string>();
  m.gamma_label = j.value("gamma_label", std::string{});
  m.alpha = j.value("alpha", 1.0);
  m.beta = j.value("beta", 1.0);
  m.seed = j.value("seed", uint64_t{0});
  m.config_hash = j.value("config_hash", std::string{});
  m.trained = j.value("trained", false);
  return m;
}

json read_sidecar(const std::string& path) {
  std::ifstream is(path + ".json");
  if (!is) throw std::runtime_error("checkpoint sidecar missing: " + path + ".json");
  json j;
  is >> j;
  if (j.at("schema_version").get<int>() != kCheckpointSchemaVersion)
    throw std::runtime_error("checkpoint schema version mismatch: " + path);
  return j;
}

void write_sidecar(const std::string& path, const json& j) {
  std::ofstream os(path + ".json");
  if (!os) throw std::runtime_error("cannot write sidecar: " + path + ".json");
  os << j.dump(2) << "\n";
}

void assign_weights(std::vector<nn::Tensor*> params,
                    const std::map<std::string, Eigen::MatrixXd>& weights,
                    const std::string& path) {
  for (nn::Tensor* t : params) {
    auto it = weights.find(t->name);
    if (it == weights.end())
      throw std::runtime_error("checkpoint " + path + " missing tensor " + t->name);
    if (it->second.rows() != t->value.rows() || it->second.cols() != t->value.cols())
      throw std::runtime_error("checkpoint " + path + " tensor " + t->name +
                               " has wrong shape");
    t->value = it->second;
  }
  if (weights.size() != params.size())
    throw std::runtime_error("checkpoint " + path + " has extra tensors");
}

std::vector<std::pair<std::string, const Eigen::MatrixXd*>> named_values(
    const std::vector<nn::Tensor*>& params) {
  std::vector<std::pair<std::string, const Eigen::MatrixXd*>> out;
  out.reserve(params.size());
  for (const nn::Tensor* t : params) out.emplace_back(t->name, &t->value);
  return out;
}

}  // namespace

void save_tensors(
    const std::string& path,
    const std::vector<std::pair<std::string, const Eigen::MatrixXd*>>& tensors) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint: " + path);
  os.write(kMagic, 4);
  write_u32(os, kCheckpointSchemaVersion);
  write_u64(os, tensors.size());
  for (const auto& [name, mat] : tensors) {
    write_u32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(os, static_cast<uint64_t>(mat->rows()));
    write_u64(os, static_cast<uint64_t>(mat->cols()));
    os.write(reinterpret_cast<const char*>(mat->data()),
             static_cast<std::streamsize>(sizeof(double) * mat->size()));
  }
  if (!os) throw std::runtime_error("short write on checkpoint: " + path);
}

std::map<std::string, Eigen::MatrixXd> load_tensors(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string_view(magic, 4) != std::string_view(kMagic, 4))
    throw std::runtime_error("bad checkpoint magic: " + path);
  if (read_u32(is) != kCheckpointSchemaVersion)
    throw std::runtime_error("checkpoint schema version mismatch: " + path);
  const uint64_t count = read_u64(is);
  std::map<std::string, Eigen::MatrixXd> out;
  for (uint64_t i = 0; i < count; i++) {
    const uint32_t name_len = read_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const auto rows = static_cast<Eigen::Index>(read_u64(is));
    const auto cols = static_cast<Eigen::Index>(read_u64(is));
    Eigen::MatrixXd m(rows, cols);
    is.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!is) throw std::runtime_error("truncated checkpoint: " + path);
    if (!m.allFinite())
      throw std::runtime_error("non-finite weights in checkpoint tensor " + name);
    out.emplace(std::move(name), std::move(m));
  }
  return out;
}

void save_checkpoint(const std::string& path, VaeModel& model,
                     const CheckpointMeta& meta) {
  save_tensors(path, named_values(model.params()));
  json j = meta_to_json(meta);
  j["encoder_spec"] = spec_to_json(model.encoder().spec());
  j["decoder_spec"] = spec_to_json(model.decoder().spec());
  j["normalization"] = stats_to_json(model.input_stats);
  j["name"] = model.name();
  write_sidecar(path, j);
}

void save_checkpoint(const std::string& path, NsVaeModel& model,
                     const CheckpointMeta& meta) {
  save_tensors(path, named_values(model.params()));
  json j = meta_to_json(meta);
  j["encoder_spec"] = spec_to_json(model.encoder().spec());
  if (model.has_decoder()) j["decoder_spec"] = spec_to_json(model.decoder().spec());
  j["normalization"] = stats_to_json(model.input_stats);
  j["name"] = model.name();
  write_sidecar(path, j);
}

LoadedVae load_vae_checkpoint(const std::string& path) {
  const json j = read_sidecar(path);
  CheckpointMeta meta = meta_from_json(j);
  if (meta.model != "cvae" && meta.model != "nvae")
    throw std::runtime_error("checkpoint " + path + " is not a C-VAE/N-VAE");
  auto model = std::make_unique<VaeModel>(
      encoder_spec_from_json(j.at("encoder_spec")),
      decoder_spec_from_json(j.at("decoder_spec")), meta.seed,
      j.value("name", meta.model));
  model->input_stats = stats_from_json(j.at("normalization"));
  assign_weights(model->params(), load_tensors(path), path);
  return LoadedVae{std::move(model), std::move(meta)};
}

LoadedNsVae load_nsvae_checkpoint(const std::string& path) {
  const json j = read_sidecar(path);
  CheckpointMeta meta = meta_from_json(j);
  if (meta.model != "nsvae")
    throw std::runtime_error("checkpoint " + path + " is not an NS-VAE");
  std::optional<DecoderSpec> dec;
  if (j.contains("decoder_spec"))
    dec = decoder_spec_from_json(j.at("decoder_spec"));
  auto model = std::make_unique<NsVaeModel>(
      encoder_spec_from_json(j.at("encoder_spec")), dec, meta.seed,
      j.value("name", meta.model));
  model->input_stats = stats_from_json(j.at("normalization"));
  assign_weights(model->params(), load_tensors(path), path);
  return LoadedNsVae{std::move(model), std::move(meta)};
}

long checkpoint_param_count(const std::string& path) {
  long n = 0;
  for (const auto& [name, mat] : load_tensors(path)) n += static_cast<long>(mat.size());
  return n;
}

}  // namespace bpvae
