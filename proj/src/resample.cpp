// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bpvae/resample.hpp"

#include <cmath>
#include <stdexcept>

namespace bpvae {

namespace {

// Blackman-windowed sinc, zero-phase, designed at the upsampled rate.
Eigen::VectorXd design_lowpass(int up, int down) {
  const int scale = std::max(up, down);
  const int half = 10 * scale;
  const int taps = 2 * half + 1;
  const double cutoff = M_PI / scale;
  Eigen::VectorXd h(taps);
  for (int j = 0; j < taps; ++j) {
    const int m = j - half;
    const double ideal = m == 0 ? cutoff / M_PI : std::sin(cutoff * m) / (M_PI * m);
    const double t = 2.0 * M_PI * j / (taps - 1);
    const double window = 0.42 - 0.5 * std::cos(t) + 0.08 * std::cos(2.0 * t);
    h[j] = up * ideal * window;
  }
  return h;
}

}  // namespace

Eigen::VectorXd resample_poly(const Eigen::VectorXd& x, int up, int down) {
  if (up < 1 || down < 1) throw std::invalid_argument("resample: factors must be >= 1");
  if (up == down) return x;
  const Eigen::Index n = x.size();
  if (n == 0) return x;

  const Eigen::VectorXd h = design_lowpass(up, down);
  const Eigen::Index taps = h.size();
  const Eigen::Index half = (taps - 1) / 2;
  const Eigen::Index out_len = (n * up + down - 1) / down;

  Eigen::VectorXd y(out_len);
  for (Eigen::Index k = 0; k < out_len; ++k) {
    const Eigen::Index u = k * down + half;  // tap-aligned upsampled index
    // input indices i with filter tap j = u - i*up in [0, taps)
    Eigen::Index i_lo = (u - taps + up) / up;  // ceil((u - taps + 1) / up)
    if (i_lo < 0) i_lo = 0;
    Eigen::Index i_hi = u / up;
    if (i_hi > n - 1) i_hi = n - 1;
    double acc = 0.0;
    for (Eigen::Index i = i_lo; i <= i_hi; ++i) acc += h[u - i * up] * x[i];
    y[k] = acc;
  }
  return y;
}

Waveform resample_poly(const Waveform& w, int up, int down) {
  Waveform out;
  out.samples = resample_poly(w.samples, up, down);
  out.sample_rate = static_cast<int>(
      static_cast<long long>(w.sample_rate) * up / down);
  return out;
}

}  // namespace bpvae
