// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bpvae/stft.hpp"

#include <stdexcept>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace bpvae {

std::string window_name(Window w) {
  switch (w) {
    case Window::HannPeriodic:
      return "hann_periodic";
  }
  throw std::invalid_argument("unknown window");
}

Window window_from_name(const std::string& name) {
  if (name == "hann_periodic") return Window::HannPeriodic;
  throw std::invalid_argument("unknown window name: " + name);
}

Eigen::VectorXd make_window(Window w, int frame_len) {
  if (frame_len < 2) throw std::invalid_argument("window: frame_len must be >= 2");
  Eigen::VectorXd win(frame_len);
  switch (w) {
    case Window::HannPeriodic:
      for (int i = 0; i < frame_len; ++i)
        win[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / frame_len));
      return win;
  }
  throw std::invalid_argument("unknown window");
}

namespace {

void check_cola(int frame_len, int hop_len) {
  if (frame_len <= 0 || hop_len <= 0)
    throw std::invalid_argument("stft: frame and hop must be positive");
  if (hop_len > frame_len)
    throw std::invalid_argument("stft: hop longer than frame breaks overlap-add");
  if (frame_len % hop_len != 0)
    throw std::invalid_argument("stft: frame_len must be a multiple of hop_len");
}

}  // namespace

Spectrogram stft(const Waveform& w, int frame_len, int hop_len, Window window) {
  check_cola(frame_len, hop_len);
  const Eigen::Index n = w.samples.size();
  if (n < frame_len)
    throw std::invalid_argument(
        "stft: waveform of " + std::to_string(n) + " samples is shorter than one frame (" +
        std::to_string(frame_len) + ")");
  if (!w.samples.allFinite())
    throw std::invalid_argument("stft: waveform contains non-finite samples");

  const Eigen::Index num_frames = (n - frame_len + hop_len - 1) / hop_len + 1;
  const Eigen::Index num_bins = frame_len / 2 + 1;
  const Eigen::VectorXd win = make_window(window, frame_len);

  Spectrogram s;
  s.frame_len = frame_len;
  s.hop_len = hop_len;
  s.window = window;
  s.bins.resize(num_bins, num_frames);

  Eigen::FFT<double> fft;
  std::vector<double> frame(static_cast<std::size_t>(frame_len));
  std::vector<std::complex<double>> spectrum;
  for (Eigen::Index t = 0; t < num_frames; ++t) {
    const Eigen::Index start = t * hop_len;
    for (int i = 0; i < frame_len; ++i) {
      const Eigen::Index idx = start + i;
      frame[static_cast<std::size_t>(i)] = idx < n ? w.samples[idx] * win[i] : 0.0;
    }
    fft.fwd(spectrum, frame);
    for (Eigen::Index f = 0; f < num_bins; ++f)
      s.bins(f, t) = spectrum[static_cast<std::size_t>(f)];
  }
  return s;
}

Waveform istft(const Spectrogram& s, int sample_rate) {
  check_cola(s.frame_len, s.hop_len);
  if (s.num_frames() < 1) throw std::invalid_argument("istft: empty spectrogram");
  if (s.num_bins() != s.frame_len / 2 + 1)
    throw std::invalid_argument("istft: bin count inconsistent with frame_len");

  const int frame_len = s.frame_len;
  const int hop_len = s.hop_len;
  const Eigen::Index num_frames = s.num_frames();
  const Eigen::Index out_len = (num_frames - 1) * hop_len + frame_len;
  const Eigen::VectorXd win = make_window(s.window, frame_len);

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(out_len);
  Eigen::VectorXd norm = Eigen::VectorXd::Zero(out_len);

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum(static_cast<std::size_t>(frame_len));
  std::vector<std::complex<double>> frame;
  for (Eigen::Index t = 0; t < num_frames; ++t) {
    // rebuild the full conjugate-symmetric spectrum
    for (int f = 0; f <= frame_len / 2; ++f)
      spectrum[static_cast<std::size_t>(f)] = s.bins(f, t);
    for (int f = frame_len / 2 + 1; f < frame_len; ++f)
      spectrum[static_cast<std::size_t>(f)] = std::conj(s.bins(frame_len - f, t));
    fft.inv(frame, spectrum);
    const Eigen::Index start = t * hop_len;
    for (int i = 0; i < frame_len; ++i) {
      acc[start + i] += frame[static_cast<std::size_t>(i)].real() * win[i];
      norm[start + i] += win[i] * win[i];
    }
  }

  Waveform out;
  out.sample_rate = sample_rate;
  out.samples = acc.array() / norm.array().max(1e-12);
  return out;
}

Spectrogram apply_mask(const Spectrogram& noisy, const Eigen::MatrixXd& mask) {
  if (mask.rows() != noisy.bins.rows() || mask.cols() != noisy.bins.cols())
    throw std::invalid_argument(
        "apply_mask: mask shape " + std::to_string(mask.rows()) + "x" +
        std::to_string(mask.cols()) + " does not match spectrogram " +
        std::to_string(noisy.bins.rows()) + "x" + std::to_string(noisy.bins.cols()));
  if (!mask.allFinite() || mask.minCoeff() < 0.0 || mask.maxCoeff() > 1.0)
    throw std::invalid_argument("apply_mask: mask entries must lie in [0, 1]");

  Spectrogram out = noisy;
  out.bins = noisy.bins.cwiseProduct(mask.cast<std::complex<double>>());
  return out;
}

}  // namespace bpvae
