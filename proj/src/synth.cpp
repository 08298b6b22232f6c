// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "bpvae/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "bpvae/wav.hpp"

namespace bpvae {

namespace {

void normalize_peak(Eigen::VectorXd& x, double peak) {
  const double m = x.cwiseAbs().maxCoeff();
  if (m > 0.0) x *= peak / m;
}

// One-pole lowpass, used for smoothing control signals and coloring noise.
Eigen::VectorXd one_pole(const Eigen::VectorXd& x, double coeff) {
  Eigen::VectorXd y(x.size());
  double state = 0.0;
  for (Eigen::Index i = 0; i < x.size(); i++) {
    state = coeff * state + (1.0 - coeff) * x[i];
    y[i] = state;
  }
  return y;
}

std::string two_digits(int v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", v);
  return buf;
}

}  // namespace

SpeakerProfile SpeakerProfile::draw(Rng& rng) {
  SpeakerProfile p;
  p.f0_base = rng.uniform(90.0, 230.0);
  p.formants[0] = rng.uniform(320.0, 820.0);
  p.formants[1] = rng.uniform(950.0, 2200.0);
  p.formants[2] = rng.uniform(2350.0, 3200.0);
  for (int i = 0; i < 3; i++) p.bandwidths[i] = rng.uniform(70.0, 180.0);
  return p;
}

Waveform synth_speech_like(double seconds, int sample_rate,
                           const SpeakerProfile& speaker, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(seconds * sample_rate);
  if (n <= 0) throw std::invalid_argument("synth_speech_like: empty signal");

  // Pitch contour: slow vibrato plus a smoothed random walk.
  const double vib_rate = rng.uniform(0.6, 1.4);
  const double vib_phase = rng.uniform(0.0, 2.0 * M_PI);
  Eigen::VectorXd walk = one_pole(rng.normal_vector(n), 0.9995);
  normalize_peak(walk, 0.06);
  Eigen::VectorXd f0(n);
  for (Eigen::Index i = 0; i < n; i++) {
    const double t = static_cast<double>(i) / sample_rate;
    f0[i] = speaker.f0_base *
            (1.0 + 0.05 * std::sin(2.0 * M_PI * vib_rate * t + vib_phase) +
             walk[i]);
  }

  // Syllabic energy envelope: rectified slow oscillation with a floor,
  // shaped by utterance attack/decay.
  const double syl_rate = rng.uniform(2.5, 4.5);
  const double syl_phase = rng.uniform(0.0, 2.0 * M_PI);
  Eigen::VectorXd env(n);
  for (Eigen::Index i = 0; i < n; i++) {
    const double t = static_cast<double>(i) / sample_rate;
    const double s = 0.55 + 0.45 * std::sin(2.0 * M_PI * syl_rate * t + syl_phase);
    const double edge = std::min({1.0, t / 0.05, (seconds - t) / 0.08});
    env[i] = std::max(0.04, s * s) * std::max(0.0, edge);
  }

  // Formant envelope sampled at harmonic frequencies of the base pitch.
  auto formant_gain = [&](double freq) {
    double g = 0.02;
    for (int k = 0; k < 3; k++) {
      const double d = (freq - speaker.formants[k]) / speaker.bandwidths[k];
      g += std::exp(-0.5 * d * d) * (k == 0 ? 1.0 : 0.7 / k);
    }
    return g / (1.0 + freq / 900.0);  // spectral tilt
  };

  const int harmonics = std::min(
      48, static_cast<int>((0.45 * sample_rate) / speaker.f0_base));
  Eigen::VectorXd gains(harmonics);
  Eigen::VectorXd phases(harmonics);
  for (int h = 0; h < harmonics; h++) {
    gains[h] = formant_gain((h + 1) * speaker.f0_base);
    phases[h] = rng.uniform(0.0, 2.0 * M_PI);
  }

  Waveform w;
  w.sample_rate = sample_rate;
  w.samples = Eigen::VectorXd::Zero(n);
  double phase = 0.0;
  for (Eigen::Index i = 0; i < n; i++) {
    phase += 2.0 * M_PI * f0[i] / sample_rate;
    double s = 0.0;
    for (int h = 0; h < harmonics; h++)
      s += gains[h] * std::sin((h + 1) * phase + phases[h]);
    w.samples[i] = s * env[i];
  }

  // Breath noise floor, high-passed by differencing a lowpass.
  Eigen::VectorXd breath = rng.normal_vector(n);
  breath -= one_pole(breath, 0.95);
  normalize_peak(breath, 0.02);
  w.samples += breath.cwiseProduct(env.cwiseMax(0.25));

  normalize_peak(w.samples, rng.uniform(0.35, 0.55));
  return w;
}

const char* noise_kind_name(int kind) {
  switch (((kind % kNoiseKinds) + kNoiseKinds) % kNoiseKinds) {
    case 0: return "white";
    case 1: return "pink";
    case 2: return "rumble";
    case 3: return "hum";
    default: return "band";
  }
}

Waveform synth_noise(double seconds, int sample_rate, int kind, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(seconds * sample_rate);
  if (n <= 0) throw std::invalid_argument("synth_noise: empty signal");
  Waveform w;
  w.sample_rate = sample_rate;
  const int k = ((kind % kNoiseKinds) + kNoiseKinds) % kNoiseKinds;
  switch (k) {
    case 0:
      w.samples = rng.normal_vector(n);
      break;
    case 1: {
      // pink-ish: sum of octave-spaced lowpassed white sources
      w.samples = Eigen::VectorXd::Zero(n);
      double coeff = 0.0;
      for (int layer = 0; layer < 5; layer++) {
        w.samples += one_pole(rng.normal_vector(n), coeff);
        coeff = 0.5 + 0.5 * coeff;
      }
      break;
    }
    case 2:
      w.samples = one_pole(one_pole(rng.normal_vector(n), 0.995), 0.995);
      break;
    case 3: {
      w.samples = Eigen::VectorXd::Zero(n);
      const double base = rng.uniform(48.0, 62.0);
      for (int h = 1; h <= 6; h++) {
        const double amp = 1.0 / h;
        const double ph = rng.uniform(0.0, 2.0 * M_PI);
        for (Eigen::Index i = 0; i < n; i++)
          w.samples[i] +=
              amp * std::sin(2.0 * M_PI * base * h * i / sample_rate + ph);
      }
      Eigen::VectorXd hiss = rng.normal_vector(n);
      normalize_peak(hiss, 0.15);
      w.samples += hiss;
      break;
    }
    default: {
      // band noise: white modulated onto a random carrier, slow AM
      const double carrier = rng.uniform(800.0, 4500.0);
      const double am_rate = rng.uniform(0.3, 2.0);
      const Eigen::VectorXd src = one_pole(rng.normal_vector(n), 0.9);
      w.samples.resize(n);
      for (Eigen::Index i = 0; i < n; i++) {
        const double t = static_cast<double>(i) / sample_rate;
        const double am = 0.7 + 0.3 * std::sin(2.0 * M_PI * am_rate * t);
        w.samples[i] = src[i] * std::sin(2.0 * M_PI * carrier * t) * am;
      }
      break;
    }
  }
  normalize_peak(w.samples, 0.3);
  return w;
}

SynthCorpus generate_corpus(const std::string& root,
                            const SynthCorpusConfig& cfg) {
  if (cfg.num_speakers < 3)
    throw std::invalid_argument("generate_corpus: need at least 3 speakers");
  namespace fs = std::filesystem;
  fs::create_directories(root + "/speech");
  fs::create_directories(root + "/noise");

  Rng rng(cfg.seed);
  SynthCorpus out;
  for (int s = 0; s < cfg.num_speakers; s++) {
    Rng srng = rng.fork("speaker" + std::to_string(s));
    const SpeakerProfile profile = SpeakerProfile::draw(srng);
    for (int u = 0; u < cfg.utterances_per_speaker; u++) {
      Rng urng = srng.fork("utt" + std::to_string(u));
      const double seconds =
          urng.uniform(cfg.utt_seconds_min, cfg.utt_seconds_max);
      const Waveform w =
          synth_speech_like(seconds, cfg.sample_rate, profile, urng);
      const std::string path = root + "/speech/spk" + two_digits(s) + "_utt" +
                               two_digits(u) + ".wav";
      write_wav(path, w, WavEncoding::Float32);
      out.speech_files.push_back(path);
    }
  }
  for (int m = 0; m < cfg.num_noise_files; m++) {
    Rng nrng = rng.fork("noise" + std::to_string(m));
    const int kind = m % kNoiseKinds;
    const Waveform w =
        synth_noise(cfg.noise_seconds, cfg.sample_rate, kind, nrng);
    const std::string path = root + "/noise/" + noise_kind_name(kind) + "_" +
                             two_digits(m) + ".wav";
    write_wav(path, w, WavEncoding::Float32);
    out.noise_files.push_back(path);
  }
  return out;
}

}  // namespace bpvae
