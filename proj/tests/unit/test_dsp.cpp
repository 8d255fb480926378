// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>

#include "synthcap/audio.hpp"
#include "synthcap/dsp.hpp"
#include "synthcap/error.hpp"
#include "synthcap/rng.hpp"

using namespace synthcap;
using namespace synthcap::dsp;

namespace {

AudioClip sine(double hz, double seconds, int rate = 16000, double amp = 0.5) {
  AudioClip c{rate, {}};
  const auto n = static_cast<std::size_t>(seconds * rate);
  for (std::size_t i = 0; i < n; ++i) {
    c.samples.push_back(static_cast<float>(amp * std::sin(2 * std::numbers::pi * hz * i / rate)));
  }
  return c;
}

// HTK mel centers, written out independently of the library.
std::vector<double> oracle_centers(int n_mels, double fmin, double fmax) {
  auto mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  std::vector<double> out;
  const double lo = mel(fmin), hi = mel(fmax);
  for (int i = 1; i <= n_mels; ++i) out.push_back(hz(lo + (hi - lo) * i / (n_mels + 1)));
  return out;
}

}  // namespace

TEST_CASE("stft of a constant signal") {
  const std::vector<float> ones(8, 1.0f);
  const auto m = stft_magnitude(ones, 4, 4, 4, Window::kRect);
  REQUIRE(m.rows() == 2);
  REQUIRE(m.cols() == 3);
  for (int t = 0; t < 2; ++t) {
    CHECK(m(t, 0) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(std::abs(m(t, 1)) < 1e-9);
    CHECK(std::abs(m(t, 2)) < 1e-9);
  }
}

TEST_CASE("stft framing and errors") {
  const std::vector<float> x(16000, 0.0f);
  CHECK(stft_magnitude(x, 512, 400, 160, Window::kHann).rows() == 98);
  const std::vector<float> short_x(399, 0.0f);
  CHECK_THROWS_WITH_AS(stft_magnitude(short_x, 512, 400, 160, Window::kHann), "input shorter than one window",
                       UsageError);
  CHECK_THROWS_AS(stft_magnitude(x, 256, 400, 160, Window::kHann), UsageError);
  CHECK_THROWS_AS(stft_magnitude(x, 512, 400, 0, Window::kHann), UsageError);
}

TEST_CASE("bin-centered sine peaks at its bin") {
  const int n_fft = 64;
  for (int k : {1, 5, 17, 31}) {
    std::vector<float> x(n_fft * 4);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(std::cos(2 * std::numbers::pi * k * i / n_fft));
    const auto m = stft_magnitude(x, n_fft, n_fft, n_fft / 2, Window::kRect);
    for (Eigen::Index t = 0; t < m.rows(); ++t) {
      Eigen::Index arg;
      m.row(t).maxCoeff(&arg);
      CHECK(arg == k);
    }
  }
}

TEST_CASE("stft agrees with a naive DFT") {
  Rng rng(4);
  std::vector<float> x(100);
  for (auto& v : x) v = static_cast<float>(rng.uniform() * 2 - 1);
  const int n_fft = 32, win = 20, hop = 7;
  const auto m = stft_magnitude(x, n_fft, win, hop, Window::kHann);
  const auto w = make_window(Window::kHann, win);
  for (Eigen::Index t = 0; t < m.rows(); ++t) {
    for (int k = 0; k <= n_fft / 2; ++k) {
      std::complex<double> acc = 0;
      for (int n = 0; n < win; ++n) {
        acc += static_cast<double>(x[t * hop + n]) * w[n] * std::polar(1.0, -2 * std::numbers::pi * k * n / n_fft);
      }
      CHECK(m(t, k) == doctest::Approx(std::abs(acc)).epsilon(1e-9));
    }
  }
}

TEST_CASE("parseval on random frames") {
  Rng rng(8);
  const int n_fft = 256;
  double worst = 0;
  for (int f = 0; f < 50; ++f) {
    std::vector<float> x(n_fft);
    for (auto& v : x) v = static_cast<float>(rng.normal());
    const auto m = stft_magnitude(x, n_fft, n_fft, n_fft, Window::kRect);
    double spec = 0;
    for (int k = 0; k <= n_fft / 2; ++k) {
      const double p = m(0, k) * m(0, k);
      spec += (k == 0 || k == n_fft / 2) ? p : 2 * p;
    }
    double energy = 0;
    for (float v : x) energy += static_cast<double>(v) * v;
    worst = std::max(worst, std::abs(spec - n_fft * energy) / (n_fft * energy));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("mel filterbank shape") {
  const auto fb = mel_filterbank(64, 512, 16000, 50, 8000);
  REQUIRE(fb.rows() == 64);
  REQUIRE(fb.cols() == 257);
  CHECK(fb.minCoeff() >= 0.0);
  CHECK(fb.maxCoeff() <= 1.0);
  for (Eigen::Index r = 0; r < fb.rows(); ++r) CHECK(fb.row(r).maxCoeff() == doctest::Approx(1.0).epsilon(1e-9));
  const auto centers = mel_center_frequencies(64, 50, 8000);
  const auto expected = oracle_centers(64, 50, 8000);
  for (std::size_t i = 0; i < centers.size(); ++i) {
    CHECK(centers[i] == doctest::Approx(expected[i]).epsilon(1e-12));
    if (i) CHECK(centers[i] > centers[i - 1]);
  }
  CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)));
  CHECK(mel_to_hz(hz_to_mel(1234.5)) == doctest::Approx(1234.5).epsilon(1e-12));
  CHECK_THROWS_AS(mel_filterbank(1, 512, 16000, 50, 8000), UsageError);
  CHECK_THROWS_AS(mel_filterbank(64, 512, 16000, 50, 9000), UsageError);
  CHECK_THROWS_AS(mel_filterbank(64, 512, 16000, 800, 700), UsageError);
}

TEST_CASE("log-mel of silence is the floor") {
  const auto spec = log_mel({16000, std::vector<float>(16000, 0.0f)});
  CHECK(spec.frames() == 98);
  CHECK(spec.bins() == 64);
  const float floor_v = static_cast<float>(std::log(1e-10));
  CHECK(floor_v == doctest::Approx(-23.0259).epsilon(1e-5));
  CHECK((spec.values.array() == floor_v).all());
}

TEST_CASE("log-mel shape for ten seconds") {
  const auto spec = log_mel({16000, std::vector<float>(160000, 0.01f)});
  CHECK(spec.frames() == 998);
  CHECK(spec.bins() == 64);
  CHECK(spec.frame_hop_s == doctest::Approx(0.01));
  CHECK(spec.window_s == doctest::Approx(0.025));
  CHECK((spec.values.array() >= kLogFloor).all());
}

TEST_CASE("440 Hz lands in the nearest mel band") {
  const auto centers = oracle_centers(64, 50, 8000);
  int expected = 0;
  for (int i = 1; i < 64; ++i) {
    if (std::abs(centers[i] - 440.0) < std::abs(centers[expected] - 440.0)) expected = i;
  }
  const auto spec = log_mel(sine(440.0, 1.0));
  for (Eigen::Index t = 0; t < spec.frames(); ++t) {
    Eigen::Index arg;
    spec.values.row(t).maxCoeff(&arg);
    CHECK(std::abs(static_cast<int>(arg) - expected) <= 1);
  }
}

TEST_CASE("trailing partial frame does not change log-mel") {
  const auto base = sine(1000.0, 1.0);
  auto longer = base;
  // (16000 - 400) % 160 = 80, so up to 79 extra samples stay inside the last hop
  for (int i = 0; i < 79; ++i) longer.samples.push_back(0.3f);
  const auto a = log_mel(base);
  const auto b = log_mel(longer);
  REQUIRE(a.frames() == b.frames());
  CHECK(a.values == b.values);
}

TEST_CASE("spec augment") {
  Rng rng(6);
  LogMelSpectrogram spec;
  spec.values = FeatureMatrix(120, 20);
  for (Eigen::Index i = 0; i < spec.values.size(); ++i) spec.values.data()[i] = static_cast<float>(rng.uniform() * 10 - 5);

  SUBCASE("zero masks is the identity") {
    CHECK(spec_augment(spec, {0, 40, 0, 8}, 1).values == spec.values);
  }
  SUBCASE("one time mask touches exactly its frames") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
      std::vector<AppliedMask> applied;
      const auto out = spec_augment(spec, {1, 40, 0, 8}, seed, &applied);
      REQUIRE(applied.size() == 1);
      const auto& m = applied[0];
      CHECK(m.time_axis);
      CHECK(m.width <= 40);
      for (Eigen::Index t = 0; t < spec.frames(); ++t) {
        const bool masked = t >= m.start && t < m.start + m.width;
        if (masked) {
          CHECK((out.values.row(t).array() == kLogFloor).all());
        } else {
          CHECK(out.values.row(t) == spec.values.row(t));
        }
      }
    }
  }
  SUBCASE("deterministic and monotone") {
    const SpecAugmentConfig cfg;
    const auto a = spec_augment(spec, cfg, 77);
    CHECK(spec_augment(spec, cfg, 77).values == a.values);
    CHECK((a.values.array() <= spec.values.array()).all());
    CHECK((a.values.array() >= std::min(kLogFloor, spec.values.minCoeff())).all());
  }
  SUBCASE("oversized widths clamp") {
    std::vector<AppliedMask> applied;
    spec_augment(spec, {3, 500, 3, 500}, 2, &applied);
    for (const auto& m : applied) {
      CHECK(m.start >= 0);
      CHECK(m.start + m.width <= (m.time_axis ? 120 : 20));
    }
    CHECK_THROWS_AS(spec_augment(spec, {-1, 4, 0, 0}, 2), UsageError);
  }
}

TEST_CASE("feature cache round trip") {
  const auto spec = log_mel(sine(300.0, 0.5));
  const std::string bytes = encode_features(spec);
  CHECK(bytes.size() == 16 + 8 + static_cast<std::size_t>(spec.values.size()) * 4);
  const auto back = decode_features(bytes);
  CHECK(back.values == spec.values);
  const auto path = std::filesystem::temp_directory_path() / "synthcap_test.lmf";
  save_features(path, spec);
  CHECK(load_features(path).values == spec.values);
  std::filesystem::remove(path);
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_features(bad), FormatError);
  CHECK_THROWS_AS(decode_features(bytes.substr(0, bytes.size() - 1)), FormatError);
}
