// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef BPVAE_STFT_HPP
#define BPVAE_STFT_HPP

#include <complex>
#include <string>

#include <Eigen/Core>

#include "bpvae/types.hpp"

namespace bpvae {

inline constexpr int kDefaultFrameLen = 512;
inline constexpr int kDefaultHopLen = 256;

enum class Window { HannPeriodic };

std::string window_name(Window w);
Window window_from_name(const std::string& name);

/// Analysis window samples.
Eigen::VectorXd make_window(Window w, int frame_len);

/// Complex time-frequency grid. Columns are frames, rows are the F =
/// frame_len/2 + 1 non-negative frequency bins.
struct Spectrogram {
  Eigen::MatrixXcd bins;  // [F x N]
  int frame_len = kDefaultFrameLen;
  int hop_len = kDefaultHopLen;
  Window window = Window::HannPeriodic;

  Eigen::Index num_bins() const { return bins.rows(); }
  Eigen::Index num_frames() const { return bins.cols(); }
};

/// Windowed short-time Fourier transform. The tail of the signal is
/// zero-padded to a whole number of frames, so N = 1 for one frame's worth
/// of samples and grows by one per hop thereafter.
/// Rejects signals shorter than one frame.
Spectrogram stft(const Waveform& w, int frame_len = kDefaultFrameLen,
                 int hop_len = kDefaultHopLen,
                 Window window = Window::HannPeriodic);

/// Weighted overlap-add synthesis (synthesis window equals the analysis
/// window, normalized by the summed squared window). Output length is
/// (N-1)*hop + frame_len; callers trim to the original sample count.
/// Requires a COLA-compliant frame/hop/window combination.
Waveform istft(const Spectrogram& s, int sample_rate = kModelSampleRate);

/// Per-bin magnitude mask, values in [0, 1], same shape as the spectrogram
/// ([F x N]). The noisy phase is preserved. Rejects shape mismatches and
/// out-of-range mask entries.
Spectrogram apply_mask(const Spectrogram& noisy, const Eigen::MatrixXd& mask);

}  // namespace bpvae

#endif  // BPVAE_STFT_HPP
