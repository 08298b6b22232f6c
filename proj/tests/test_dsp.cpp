// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "bpvae/features.hpp"
#include "bpvae/mixing.hpp"
#include "bpvae/resample.hpp"
#include "bpvae/rng.hpp"
#include "bpvae/stft.hpp"
#include "bpvae/wav.hpp"

using namespace bpvae;

namespace {

Waveform random_wave(Eigen::Index n, std::uint64_t seed, int rate = 16000) {
  Rng rng(seed);
  Waveform w;
  w.sample_rate = rate;
  w.samples = 0.3 * rng.normal_vector(n);
  return w;
}

Waveform sine(double freq, double seconds, int rate, double amp = 0.5) {
  Waveform w;
  w.sample_rate = rate;
  const Eigen::Index n = static_cast<Eigen::Index>(seconds * rate);
  w.samples.resize(n);
  for (Eigen::Index i = 0; i < n; i++)
    w.samples[i] = amp * std::sin(2.0 * M_PI * freq * i / rate);
  return w;
}

std::string tmp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "bpvae_dsp_test";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST_CASE("wav round-trip float32 is exact on float-representable data") {
  Waveform w = random_wave(4321, 7);
  for (Eigen::Index i = 0; i < w.size(); i++)
    w.samples[i] = static_cast<double>(static_cast<float>(w.samples[i]));
  const std::string path = tmp_path("rt_f32.wav");
  write_wav(path, w, WavEncoding::Float32);
  const Waveform r = read_wav(path);
  CHECK(r.sample_rate == w.sample_rate);
  REQUIRE(r.size() == w.size());
  CHECK((r.samples - w.samples).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("wav round-trip pcm16 within quantization step") {
  Waveform w = random_wave(2000, 9);
  w.samples = w.samples.cwiseMax(-0.99).cwiseMin(0.99);
  const std::string path = tmp_path("rt_pcm16.wav");
  write_wav(path, w, WavEncoding::Pcm16);
  const Waveform r = read_wav(path);
  REQUIRE(r.size() == w.size());
  // Written at x*32767, read back as s/32768: half a step of rounding plus
  // the scale asymmetry bounds the error by 1.5/32768.
  CHECK((r.samples - w.samples).cwiseAbs().maxCoeff() <= 1.5 / 32768.0);
}

TEST_CASE("read_wav rejects missing files") {
  CHECK_THROWS(read_wav(tmp_path("does_not_exist.wav")));
}

TEST_CASE("stft puts a 1 kHz tone in bin 32 at 16 kHz / 512-point frames") {
  const Waveform w = sine(1000.0, 1.0, 16000);
  const Spectrogram s = stft(w);
  REQUIRE(s.num_bins() == 257);
  // 1000 Hz * 512 / 16000 = bin 32 exactly; every interior frame peaks there.
  for (Eigen::Index m = 2; m + 2 < s.num_frames(); m++) {
    Eigen::Index peak = 0;
    s.bins.col(m).cwiseAbs().maxCoeff(&peak);
    CHECK(peak == 32);
  }
}

TEST_CASE("stft magnitude matches a direct windowed DFT") {
  const Waveform w = random_wave(3000, 21);
  const Spectrogram s = stft(w);
  const Eigen::VectorXd win = make_window(Window::HannPeriodic, 512);
  const Eigen::Index frame = 3;
  for (Eigen::Index k : {0, 1, 32, 200, 256}) {
    std::complex<double> acc(0.0, 0.0);
    for (int t = 0; t < 512; t++) {
      const double x = win[t] * w.samples[frame * 256 + t];
      const double ang = -2.0 * M_PI * k * t / 512.0;
      acc += x * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    CHECK(std::abs(acc - s.bins(k, frame)) <= 1e-9);
  }
}

TEST_CASE("stft/istft round-trip: interior error below 1e-6") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const Waveform w = random_wave(16000 + 137 * static_cast<Eigen::Index>(seed), seed);
    const Waveform back = istft(stft(w), w.sample_rate);
    REQUIRE(back.size() >= w.size() - 512);
    double worst = 0.0;
    const double scale = w.samples.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 512; i < w.size() - 512 && i < back.size(); i++)
      worst = std::max(worst, std::abs(back.samples[i] - w.samples[i]) / scale);
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("apply_mask: ones is identity, zeros silences, bad shape throws") {
  const Waveform w = random_wave(5000, 5);
  const Spectrogram s = stft(w);
  const Eigen::MatrixXd ones =
      Eigen::MatrixXd::Ones(s.num_bins(), s.num_frames());
  const Spectrogram same = apply_mask(s, ones);
  CHECK((same.bins - s.bins).cwiseAbs().maxCoeff() == 0.0);
  const Spectrogram silent = apply_mask(s, 0.0 * ones);
  CHECK(silent.bins.cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS(apply_mask(s, Eigen::MatrixXd::Ones(3, 3)));
}

TEST_CASE("lps equals log of floored power per bin") {
  const Waveform w = random_wave(4000, 11);
  const Spectrogram s = stft(w);
  const LpsFrames f = lps(s);
  REQUIRE(f.num_bins() == s.num_bins());
  REQUIRE(f.num_frames() == s.num_frames());
  for (Eigen::Index k : {0, 10, 100}) {
    const double p = std::norm(s.bins(k, 2));
    CHECK(f.values(k, 2) ==
          doctest::Approx(std::log(std::max(p, kDefaultPowerFloor)))
              .epsilon(1e-12));
  }
  Waveform silence;
  silence.sample_rate = 16000;
  silence.samples = Eigen::VectorXd::Zero(4096);
  const LpsFrames fs = lps(stft(silence));
  CHECK(fs.values.maxCoeff() ==
        doctest::Approx(std::log(kDefaultPowerFloor)).epsilon(1e-12));
}

TEST_CASE("feature stats normalize/denormalize are inverse maps") {
  Rng rng(3);
  const Eigen::MatrixXd frames =
      rng.normal_matrix(33, 220) * 4.0 +
      Eigen::MatrixXd::Constant(33, 220, -7.0);
  const FeatureStats stats = compute_feature_stats(frames);
  const Eigen::MatrixXd norm = stats.normalize(frames);
  CHECK(std::abs(norm.row(5).mean()) <= 1e-9);
  CHECK((stats.denormalize(norm) - frames).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("mixing hits the requested SNR within 0.1 dB over 100 triples") {
  Rng rng(42);
  for (int i = 0; i < 100; i++) {
    const Waveform speech = random_wave(9000 + 100 * (i % 7), 1000 + i);
    const Waveform noise = random_wave(16000, 2000 + i);
    const double snr = -10.0 + 25.0 * rng.uniform();
    const MixResult mix = mix_at_snr(speech, noise, snr, 7000 + i);
    const double realized =
        10.0 * std::log10(signal_power(mix.speech, PowerMeasure::FullUtterance) /
                          signal_power(mix.scaled_noise,
                                       PowerMeasure::FullUtterance));
    CHECK(std::abs(realized - snr) <= 0.1);
    CHECK(std::abs(mix.realized_snr_db - snr) <= 0.1);
    CHECK((mix.noisy.samples - mix.speech.samples - mix.scaled_noise.samples)
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
  }
}

TEST_CASE("mixing is deterministic in the seed") {
  const Waveform speech = random_wave(8000, 1);
  const Waveform noise = random_wave(20000, 2);
  const MixResult a = mix_at_snr(speech, noise, 5.0, 99);
  const MixResult b = mix_at_snr(speech, noise, 5.0, 99);
  const MixResult c = mix_at_snr(speech, noise, 5.0, 100);
  CHECK((a.noisy.samples - b.noisy.samples).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.noisy.samples - c.noisy.samples).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("resample_poly preserves tone frequency 16k -> 8k") {
  const Waveform w = sine(440.0, 1.0, 16000);
  const Waveform r = resample_poly(w, 1, 2);
  CHECK(r.sample_rate == 8000);
  CHECK(r.size() == 8000);
  // Count zero crossings over the stable interior: ~2*440 per second.
  int crossings = 0;
  for (Eigen::Index i = 401; i + 400 < r.size(); i++)
    if ((r.samples[i - 1] < 0.0) != (r.samples[i] < 0.0)) crossings++;
  const double expected = 2.0 * 440.0 * (r.size() - 801) / 8000.0;
  CHECK(std::abs(crossings - expected) <= 4.0);
}

TEST_CASE("resample_poly with equal factors is identity") {
  const Waveform w = random_wave(5000, 17);
  const Waveform r = resample_poly(w, 1, 1);
  CHECK((r.samples - w.samples).cwiseAbs().maxCoeff() == 0.0);
}
