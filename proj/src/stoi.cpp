// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bpvae/stoi.hpp"

#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

#include "bpvae/resample.hpp"

namespace bpvae {

namespace {

constexpr int kFs = 10000;
constexpr int kFrame = 256;
constexpr int kHop = 128;
constexpr int kNfft = 512;
constexpr int kBands = 15;
constexpr double kMinFreq = 150.0;
constexpr int kSegFrames = 30;       // 30 frames = 384 ms at 10 kHz
constexpr double kDynRange = 40.0;   // silent-frame gate, dB
constexpr double kClip = 5.623413251903491;  // 10^(15/20), -15 dB SDR bound
constexpr double kEps = 2.220446049250313e-16;

Eigen::VectorXd matlab_hanning(int n) {
  Eigen::VectorXd w(n);
  for (int k = 0; k < n; k++)
    w[k] = 0.5 * (1.0 - std::cos(2.0 * M_PI * (k + 1) / (n + 1)));
  return w;
}

// Frame starts follow the i + frame < n convention shared with the
// reference implementation.
std::vector<Eigen::Index> frame_starts(Eigen::Index n) {
  std::vector<Eigen::Index> starts;
  for (Eigen::Index i = 0; i + kFrame < n; i += kHop) starts.push_back(i);
  return starts;
}

void remove_silent_frames(Eigen::VectorXd& x, Eigen::VectorXd& y) {
  const Eigen::VectorXd w = matlab_hanning(kFrame);
  const auto starts = frame_starts(x.size());
  if (starts.empty()) throw std::invalid_argument("stoi: input too short");

  std::vector<double> energy(starts.size());
  double max_energy = -1e300;
  for (size_t f = 0; f < starts.size(); f++) {
    const double nrm = (x.segment(starts[f], kFrame).array() * w.array())
                           .matrix()
                           .norm();
    energy[f] = 20.0 * std::log10(nrm + kEps);
    max_energy = std::max(max_energy, energy[f]);
  }

  std::vector<size_t> keep;
  for (size_t f = 0; f < starts.size(); f++)
    if (max_energy - kDynRange - energy[f] < 0) keep.push_back(f);
  if (keep.empty()) throw std::invalid_argument("stoi: reference is silent");

  const Eigen::Index out_len =
      static_cast<Eigen::Index>(keep.size() - 1) * kHop + kFrame;
  Eigen::VectorXd xs = Eigen::VectorXd::Zero(out_len);
  Eigen::VectorXd ys = Eigen::VectorXd::Zero(out_len);
  for (size_t k = 0; k < keep.size(); k++) {
    const Eigen::Index dst = static_cast<Eigen::Index>(k) * kHop;
    const Eigen::Index src = starts[keep[k]];
    xs.segment(dst, kFrame).array() +=
        x.segment(src, kFrame).array() * w.array();
    ys.segment(dst, kFrame).array() +=
        y.segment(src, kFrame).array() * w.array();
  }
  x = std::move(xs);
  y = std::move(ys);
}

// [kBands x kNfft/2+1] one-third-octave selection matrix with
// nearest-bin rounded edges.
Eigen::MatrixXd third_octave_matrix() {
  const int bins = kNfft / 2 + 1;
  Eigen::VectorXd f(bins);
  for (int k = 0; k < bins; k++)
    f[k] = static_cast<double>(k) * (kFs / 2.0) / (bins - 1);
  Eigen::MatrixXd obm = Eigen::MatrixXd::Zero(kBands, bins);
  for (int j = 0; j < kBands; j++) {
    const double cf = kMinFreq * std::pow(2.0, j / 3.0);
    const double lo = cf / std::pow(2.0, 1.0 / 6.0);
    const double hi = cf * std::pow(2.0, 1.0 / 6.0);
    int lo_ii = 0, hi_ii = 0;
    double lo_d = 1e300, hi_d = 1e300;
    for (int k = 0; k < bins; k++) {
      const double dl = (f[k] - lo) * (f[k] - lo);
      const double dh = (f[k] - hi) * (f[k] - hi);
      if (dl < lo_d) { lo_d = dl; lo_ii = k; }
      if (dh < hi_d) { hi_d = dh; hi_ii = k; }
    }
    for (int k = lo_ii; k < hi_ii; k++) obm(j, k) = 1.0;
  }
  return obm;
}

// Band envelope matrix [kBands x M]: sqrt of one-third-octave grouped
// power spectra of hann-windowed, zero-padded frames.
Eigen::MatrixXd band_envelopes(const Eigen::VectorXd& x,
                               const Eigen::MatrixXd& obm) {
  const Eigen::VectorXd w = matlab_hanning(kFrame);
  const auto starts = frame_starts(x.size());
  if (starts.empty()) throw std::invalid_argument("stoi: input too short");

  Eigen::FFT<double> fft;
  const int bins = kNfft / 2 + 1;
  Eigen::MatrixXd power(bins, static_cast<Eigen::Index>(starts.size()));
  std::vector<double> buf(kNfft, 0.0);
  std::vector<std::complex<double>> spec(kNfft);
  for (size_t m = 0; m < starts.size(); m++) {
    for (int i = 0; i < kFrame; i++) buf[i] = x[starts[m] + i] * w[i];
    for (int i = kFrame; i < kNfft; i++) buf[i] = 0.0;
    fft.fwd(spec, buf);
    for (int k = 0; k < bins; k++) power(k, static_cast<Eigen::Index>(m)) = std::norm(spec[k]);
  }
  return (obm * power).array().sqrt().matrix();
}

}  // namespace

double stoi(const Waveform& reference, const Waveform& estimate) {
  if (reference.size() != estimate.size())
    throw std::invalid_argument("stoi: length mismatch");
  if (reference.sample_rate != estimate.sample_rate)
    throw std::invalid_argument("stoi: sample-rate mismatch");
  if (!reference.all_finite() || !estimate.all_finite())
    throw std::invalid_argument("stoi: non-finite samples");

  Eigen::VectorXd x = reference.samples;
  Eigen::VectorXd y = estimate.samples;
  if (reference.sample_rate != kFs) {
    const int g = std::gcd(reference.sample_rate, kFs);
    x = resample_poly(x, kFs / g, reference.sample_rate / g);
    y = resample_poly(y, kFs / g, reference.sample_rate / g);
  }

  remove_silent_frames(x, y);

  const Eigen::MatrixXd obm = third_octave_matrix();
  const Eigen::MatrixXd x_tob = band_envelopes(x, obm);
  const Eigen::MatrixXd y_tob = band_envelopes(y, obm);
  const Eigen::Index frames = x_tob.cols();
  if (frames < kSegFrames)
    throw std::invalid_argument("stoi: shorter than one analysis segment");

  double d_sum = 0.0;
  const Eigen::Index n_segments = frames - kSegFrames + 1;
  for (Eigen::Index m = 0; m < n_segments; m++) {
    const Eigen::MatrixXd xs = x_tob.middleCols(m, kSegFrames);
    const Eigen::MatrixXd ys = y_tob.middleCols(m, kSegFrames);
    for (int j = 0; j < kBands; j++) {
      const Eigen::RowVectorXd xr = xs.row(j);
      Eigen::RowVectorXd yr =
          ys.row(j) * (xr.norm() / (ys.row(j).norm() + kEps));
      yr = yr.cwiseMin(xr * (1.0 + kClip));
      Eigen::RowVectorXd xc = xr.array() - xr.mean();
      Eigen::RowVectorXd yc = yr.array() - yr.mean();
      d_sum += (xc.array() / (xc.norm() + kEps) * yc.array() / (yc.norm() + kEps))
                   .sum();
    }
  }
  const double d = d_sum / static_cast<double>(n_segments * kBands);
  return std::clamp(d, 0.0, 1.0);
}

}  // namespace bpvae
