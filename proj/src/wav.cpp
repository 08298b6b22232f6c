// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bpvae/wav.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "bpvae/resample.hpp"

namespace bpvae {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(v & 0xFF);
  out.push_back((v >> 8) & 0xFF);
  out.push_back((v >> 16) & 0xFF);
  out.push_back((v >> 24) & 0xFF);
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(v & 0xFF);
  out.push_back((v >> 8) & 0xFF);
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("wav: cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw std::runtime_error("wav: not a RIFF/WAVE file: " + path);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t size = read_u32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size())
      throw std::runtime_error("wav: truncated chunk in " + path);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (size < 16) throw std::runtime_error("wav: malformed fmt chunk in " + path);
      format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      rate = read_u32(bytes.data() + body + 4);
      bits = read_u16(bytes.data() + body + 14);
      if (format == kFormatExtensible && size >= 40)
        format = read_u16(bytes.data() + body + 24);
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = size;
    }
    pos = body + size + (size & 1);
  }

  if (data == nullptr) throw std::runtime_error("wav: missing data chunk in " + path);
  if (channels != 1)
    throw std::runtime_error("wav: expected mono input, got " +
                             std::to_string(channels) + " channels in " + path);

  Waveform w;
  if (format == kFormatPcm && bits == 16) {
    const std::size_t n = data_len / 2;
    w.samples.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const std::int16_t s =
          static_cast<std::int16_t>(data[2 * i] | (data[2 * i + 1] << 8));
      w.samples[static_cast<Eigen::Index>(i)] = s / 32768.0;
    }
  } else if (format == kFormatFloat && bits == 32) {
    const std::size_t n = data_len / 4;
    w.samples.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      float f;
      std::memcpy(&f, data + 4 * i, 4);
      w.samples[static_cast<Eigen::Index>(i)] = f;
    }
  } else {
    throw std::runtime_error("wav: unsupported encoding (format=" +
                             std::to_string(format) + ", bits=" +
                             std::to_string(bits) + ") in " + path);
  }

  if (!w.samples.allFinite())
    throw std::runtime_error("wav: non-finite samples in " + path);

  if (rate == static_cast<std::uint32_t>(kModelSampleRate)) {
    w.sample_rate = kModelSampleRate;
  } else if (rate == 48000) {
    w.sample_rate = 48000;
    w = resample_poly(w, 1, 3);
  } else {
    throw std::runtime_error("wav: unsupported sample rate " +
                             std::to_string(rate) + " in " + path +
                             " (expected 16000 or 48000)");
  }
  return w;
}

void write_wav(const std::string& path, const Waveform& w, WavEncoding enc) {
  if (!w.samples.allFinite())
    throw std::runtime_error("wav: refusing to write non-finite samples to " + path);

  const std::uint32_t n = static_cast<std::uint32_t>(w.samples.size());
  const std::uint16_t bytes_per = enc == WavEncoding::Float32 ? 4 : 2;
  const std::uint32_t data_len = n * bytes_per;

  std::vector<unsigned char> out;
  out.reserve(44 + data_len);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, enc == WavEncoding::Float32 ? kFormatFloat : kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate) * bytes_per);
  put_u16(out, bytes_per);
  put_u16(out, static_cast<std::uint16_t>(8 * bytes_per));
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_len);

  if (enc == WavEncoding::Float32) {
    for (Eigen::Index i = 0; i < w.samples.size(); ++i) {
      const float f = static_cast<float>(w.samples[i]);
      unsigned char b[4];
      std::memcpy(b, &f, 4);
      out.insert(out.end(), b, b + 4);
    }
  } else {
    for (Eigen::Index i = 0; i < w.samples.size(); ++i) {
      double v = std::min(1.0, std::max(-1.0, w.samples[i]));
      const auto s = static_cast<std::int16_t>(std::lrint(v * 32767.0));
      out.push_back(static_cast<unsigned char>(s & 0xFF));
      out.push_back(static_cast<unsigned char>((s >> 8) & 0xFF));
    }
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("wav: cannot write " + path);
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
}

}  // namespace bpvae
