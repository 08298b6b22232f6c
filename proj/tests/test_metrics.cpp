// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <sys/stat.h>

#include "bpvae/metrics.hpp"
#include "bpvae/rng.hpp"
#include "bpvae/stoi.hpp"
#include "bpvae/wav.hpp"

using namespace bpvae;

namespace {

const std::string kDataDir = BPVAE_TEST_DATA_DIR;

Waveform random_wave(uint64_t seed, Eigen::Index n, int rate = 16000) {
  Rng rng(seed);
  Waveform w;
  w.samples = rng.normal_vector(n);
  w.sample_rate = rate;
  return w;
}

Waveform from_list(std::initializer_list<double> v, int rate = 16000) {
  Waveform w;
  w.samples = Eigen::Map<const Eigen::VectorXd>(v.begin(),
                                                static_cast<Eigen::Index>(v.size()));
  w.sample_rate = rate;
  return w;
}

std::string write_stub(const std::string& name, const std::string& body) {
  const std::string path = "/tmp/bpvae_metrics_" + name + ".sh";
  {
    std::ofstream f(path);
    f << "#!/bin/sh\n" << body << "\n";
  }
  ::chmod(path.c_str(), 0755);
  return path;
}

}  // namespace

TEST_CASE("si_sdr pins the spec example: ref [1,0], est [1,1] -> 0 dB") {
  const double v = si_sdr(from_list({1.0, 0.0}), from_list({1.0, 1.0}));
  CHECK(v == 0.0);
}

TEST_CASE("si_sdr is invariant to estimate scaling") {
  const Waveform ref = random_wave(1, 4000);
  Waveform est = random_wave(2, 4000);
  est.samples = 0.8 * ref.samples + 0.1 * est.samples;
  const double base = si_sdr(ref, est);
  for (const double s : {1e-4, 0.5, 3.0, 1e4}) {
    Waveform scaled = est;
    scaled.samples *= s;
    CHECK(std::abs(si_sdr(ref, scaled) - base) <= 1e-9);
  }
}

TEST_CASE("si_sdr caps at +/-60 dB") {
  const Waveform ref = random_wave(3, 1000);
  CHECK(si_sdr(ref, ref) == 60.0);
  Waveform anti = ref;
  anti.samples = random_wave(4, 1000).samples;
  // Orthogonalize the estimate against the reference: projection ~ 0.
  const double c = ref.samples.dot(anti.samples) / ref.samples.squaredNorm();
  anti.samples -= c * ref.samples;
  CHECK(si_sdr(ref, anti) == -60.0);
}

TEST_CASE("si_sdr degrades monotonically with added noise") {
  const Waveform ref = random_wave(5, 8000);
  const Waveform noise = random_wave(6, 8000);
  double prev = 61.0;
  for (const double lvl : {0.01, 0.1, 0.5, 2.0}) {
    Waveform est = ref;
    est.samples += lvl * noise.samples;
    const double v = si_sdr(ref, est);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("si_sdr is not shift-invariant (documented sharp edge)") {
  const Waveform ref = random_wave(7, 4000);
  Waveform shifted = ref;
  shifted.samples.array() += 10.0;
  CHECK(si_sdr(ref, shifted) < 1.0);
  SiSdrOptions zm;
  zm.zero_mean = true;
  CHECK(si_sdr(ref, shifted, zm) == 60.0);
}

TEST_CASE("si_sdr rejects degenerate inputs") {
  CHECK_THROWS(si_sdr(from_list({0.0, 0.0, 0.0}), from_list({1.0, 0.0, 0.0})));
  CHECK_THROWS(si_sdr(from_list({1.0, 0.0}), from_list({1.0, 0.0, 0.0})));
  CHECK_THROWS(si_sdr(Waveform{}, Waveform{}));
}

TEST_CASE("aggregate uses the population sd and 1.96/sqrt(n)") {
  const MetricAggregate a = aggregate({0.0, 2.0});
  CHECK(a.mean == doctest::Approx(1.0));
  CHECK(a.ci95 == doctest::Approx(1.96 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(a.n == 2);

  const MetricAggregate b = aggregate({3.0, 1.0, 2.0, 0.0});
  const MetricAggregate c = aggregate({0.0, 1.0, 2.0, 3.0});
  CHECK(b.mean == c.mean);
  CHECK(b.ci95 == c.ci95);

  CHECK_THROWS(aggregate({}));
  CHECK_THROWS(aggregate({1.0}));
}

TEST_CASE("stoi matches the frozen reference fixtures within 0.01") {
  std::ifstream in(kDataDir + "/metrics_expected.json");
  REQUIRE(in.good());
  const nlohmann::json expected = nlohmann::json::parse(in);
  REQUIRE(expected.size() == 10);
  for (const auto& e : expected) {
    const Waveform ref = read_wav(kDataDir + "/" + e["reference"].get<std::string>());
    const Waveform est = read_wav(kDataDir + "/" + e["estimate"].get<std::string>());
    const double got = stoi(ref, est);
    const double want = e["stoi"].get<double>();
    INFO("fixture ", e["name"].get<std::string>());
    CHECK(std::abs(got - want) <= 0.01);
    // The same fixtures pin SI-SDR against the independent reference.
    const double sdr = si_sdr(ref, est);
    CHECK(std::abs(sdr - e["si_sdr_db"].get<double>()) <= 0.05);
  }
}

TEST_CASE("stoi sanity: self-similarity high, more noise scores lower") {
  std::ifstream in(kDataDir + "/metrics_expected.json");
  REQUIRE(in.good());
  const nlohmann::json expected = nlohmann::json::parse(in);
  double snr10 = -1.0, snr0 = -1.0;
  for (const auto& e : expected) {
    const std::string name = e["name"].get<std::string>();
    if (name == "white_snr10") snr10 = e["stoi"].get<double>();
    if (name == "white_snr0") snr0 = e["stoi"].get<double>();
    if (name == "identity") {
      const Waveform ref =
          read_wav(kDataDir + "/" + e["reference"].get<std::string>());
      CHECK(stoi(ref, ref) >= 0.999);
    }
  }
  REQUIRE(snr10 > 0.0);
  REQUIRE(snr0 > 0.0);
  CHECK(snr10 > snr0);
}

TEST_CASE("stoi rejects clips shorter than 30 analysis frames") {
  const Waveform tiny = random_wave(8, 3200);  // 0.2 s at 16 kHz
  CHECK_THROWS(stoi(tiny, tiny));
  CHECK_THROWS(stoi(random_wave(9, 16000), random_wave(10, 8000)));
}

TEST_CASE("pesq adapter parses the last token of the last line") {
  const std::string ok = write_stub(
      "ok", "echo \"ITU-T P.862 stub\"\necho \"PESQ_MOS = 3.25\"");
  ::setenv(kPesqEnv, ok.c_str(), 1);
  CHECK(pesq_available());
  const auto score = pesq_external("/dev/null", "/dev/null", 16000);
  REQUIRE(score.has_value());
  CHECK(*score == doctest::Approx(3.25));
  std::remove(ok.c_str());
}

TEST_CASE("pesq adapter turns failures into n/a, not errors") {
  const std::string bad = write_stub("bad", "echo broken >&2\nexit 1");
  ::setenv(kPesqEnv, bad.c_str(), 1);
  CHECK_FALSE(pesq_external("/dev/null", "/dev/null", 16000).has_value());
  std::remove(bad.c_str());

  const std::string junk = write_stub("junk", "echo \"no score here:\"");
  ::setenv(kPesqEnv, junk.c_str(), 1);
  CHECK_FALSE(pesq_external("/dev/null", "/dev/null", 16000).has_value());
  std::remove(junk.c_str());

  ::unsetenv(kPesqEnv);
  CHECK_FALSE(pesq_available());
  CHECK_FALSE(pesq_external("/dev/null", "/dev/null", 16000).has_value());
}
