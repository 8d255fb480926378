// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthcap/dsp.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <complex>
#include <numbers>

#include "synthcap/error.hpp"
#include "synthcap/io.hpp"
#include "synthcap/rng.hpp"

namespace synthcap::dsp {

std::vector<double> make_window(Window window, int win) {
  std::vector<double> w(static_cast<std::size_t>(win), 1.0);
  if (window == Window::kHann) {
    for (int n = 0; n < win; ++n) {
      w[static_cast<std::size_t>(n)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / win);
    }
  }
  return w;
}

RealMatrix stft_magnitude(std::span<const float> samples, int n_fft, int win, int hop, Window window) {
  if (win <= 0 || n_fft <= 0 || win > n_fft) throw UsageError("stft: require 0 < win <= n_fft");
  if (hop < 1) throw UsageError("stft: hop must be at least 1");
  if (samples.size() < static_cast<std::size_t>(win)) throw UsageError("input shorter than one window");

  const auto n_frames = static_cast<Eigen::Index>(1 + (samples.size() - static_cast<std::size_t>(win)) /
                                                          static_cast<std::size_t>(hop));
  const Eigen::Index n_bins = n_fft / 2 + 1;
  const auto w = make_window(window, win);

  Eigen::FFT<double> fft;
  std::vector<double> frame(static_cast<std::size_t>(n_fft), 0.0);
  std::vector<std::complex<double>> spectrum;
  RealMatrix out(n_frames, n_bins);
  for (Eigen::Index t = 0; t < n_frames; ++t) {
    const std::size_t offset = static_cast<std::size_t>(t) * static_cast<std::size_t>(hop);
    for (int n = 0; n < win; ++n) {
      frame[static_cast<std::size_t>(n)] = samples[offset + static_cast<std::size_t>(n)] * w[static_cast<std::size_t>(n)];
    }
    fft.fwd(spectrum, frame);
    for (Eigen::Index k = 0; k < n_bins; ++k) out(t, k) = std::abs(spectrum[static_cast<std::size_t>(k)]);
  }
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

std::vector<double> mel_edges(int n_mels, double fmin, double fmax) {
  const double lo = hz_to_mel(fmin), hi = hz_to_mel(fmax);
  std::vector<double> edges(static_cast<std::size_t>(n_mels + 2));
  for (int i = 0; i < n_mels + 2; ++i) edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n_mels + 1);
  return edges;
}

}  // namespace

std::vector<double> mel_center_frequencies(int n_mels, double fmin, double fmax) {
  const auto edges = mel_edges(n_mels, fmin, fmax);
  std::vector<double> centers(static_cast<std::size_t>(n_mels));
  for (int m = 0; m < n_mels; ++m) centers[static_cast<std::size_t>(m)] = mel_to_hz(edges[static_cast<std::size_t>(m + 1)]);
  return centers;
}

RealMatrix mel_filterbank(int n_mels, int n_fft, int sample_rate, double fmin, double fmax) {
  if (n_mels < 2) throw UsageError("mel_filterbank: n_mels must be at least 2");
  if (n_fft < 2) throw UsageError("mel_filterbank: n_fft must be at least 2");
  if (sample_rate <= 0) throw UsageError("mel_filterbank: sample rate must be positive");
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0)) {
    throw UsageError("mel_filterbank: require 0 <= fmin < fmax <= sample_rate / 2");
  }
  const Eigen::Index n_bins = n_fft / 2 + 1;
  const auto edges = mel_edges(n_mels, fmin, fmax);
  RealMatrix fb = RealMatrix::Zero(n_mels, n_bins);
  for (int m = 0; m < n_mels; ++m) {
    const double left = edges[static_cast<std::size_t>(m)];
    const double center = edges[static_cast<std::size_t>(m + 1)];
    const double right = edges[static_cast<std::size_t>(m + 2)];
    for (Eigen::Index k = 0; k < n_bins; ++k) {
      const double mel = hz_to_mel(static_cast<double>(k) * sample_rate / n_fft);
      const double rise = (mel - left) / (center - left);
      const double fall = (right - mel) / (right - center);
      fb(m, k) = std::max(0.0, std::min(rise, fall));
    }
    const double peak = fb.row(m).maxCoeff();
    if (peak > 0.0) {
      fb.row(m) /= peak;
    } else {
      // Triangle narrower than the bin spacing: put the unit peak on the
      // bin nearest its centre.
      const double center_hz = mel_to_hz(center);
      const auto k = static_cast<Eigen::Index>(std::lround(center_hz * n_fft / sample_rate));
      fb(m, std::min(k, n_bins - 1)) = 1.0;
    }
  }
  return fb;
}

LogMelSpectrogram log_mel(const AudioClip& clip, const LogMelConfig& cfg) {
  const RealMatrix mag = stft_magnitude(clip.samples, cfg.n_fft, cfg.win, cfg.hop, cfg.window);
  const RealMatrix fb = mel_filterbank(cfg.n_mels, cfg.n_fft, clip.sample_rate, cfg.fmin, cfg.fmax);
  const RealMatrix mel = mag.array().square().matrix() * fb.transpose();
  LogMelSpectrogram spec;
  spec.sample_rate = clip.sample_rate;
  spec.frame_hop_s = static_cast<double>(cfg.hop) / clip.sample_rate;
  spec.window_s = static_cast<double>(cfg.win) / clip.sample_rate;
  spec.values.resize(mel.rows(), mel.cols());
  for (Eigen::Index t = 0; t < mel.rows(); ++t) {
    for (Eigen::Index m = 0; m < mel.cols(); ++m) {
      const auto v = static_cast<float>(std::log(std::max(mel(t, m), kPowerFloor)));
      spec.values(t, m) = std::max(v, kLogFloor);
    }
  }
  return spec;
}

LogMelSpectrogram spec_augment(const LogMelSpectrogram& spec, const SpecAugmentConfig& cfg, uint64_t seed,
                               std::vector<AppliedMask>* applied) {
  if (cfg.n_time_masks < 0 || cfg.n_freq_masks < 0 || cfg.max_time_width < 0 || cfg.max_freq_width < 0) {
    throw UsageError("spec_augment: mask counts and widths must be non-negative");
  }
  LogMelSpectrogram out = spec;
  Rng rng(seed);
  const auto n_bins = static_cast<int>(spec.bins());
  const auto n_frames = static_cast<int>(spec.frames());

  for (int i = 0; i < cfg.n_freq_masks; ++i) {
    const int max_w = std::min(cfg.max_freq_width, n_bins);
    const auto width = static_cast<int>(rng.uniform_int(0, max_w));
    const auto start = static_cast<int>(rng.uniform_int(0, n_bins - width));
    if (width > 0) out.values.middleCols(start, width).setConstant(kLogFloor);
    if (applied) applied->push_back({false, start, width});
  }
  for (int i = 0; i < cfg.n_time_masks; ++i) {
    const int max_w = std::min(cfg.max_time_width, n_frames);
    const auto width = static_cast<int>(rng.uniform_int(0, max_w));
    const auto start = static_cast<int>(rng.uniform_int(0, n_frames - width));
    if (width > 0) out.values.middleRows(start, width).setConstant(kLogFloor);
    if (applied) applied->push_back({true, start, width});
  }
  return out;
}

namespace {
// "SYNTHCAP_LMEL" followed by version bytes 00 01 00.
constexpr char kFeatureMagic[16] = {'S', 'Y', 'N', 'T', 'H', 'C', 'A', 'P', '_', 'L', 'M', 'E', 'L', 0, 1, 0};
constexpr std::size_t kFeatureHeader = 16;
}  // namespace

std::string encode_features(const LogMelSpectrogram& spec) {
  std::string out(kFeatureMagic, kFeatureHeader);
  io::put_u32(out, static_cast<uint32_t>(spec.frames()));
  io::put_u32(out, static_cast<uint32_t>(spec.bins()));
  out.reserve(out.size() + static_cast<std::size_t>(spec.values.size()) * 4);
  for (Eigen::Index i = 0; i < spec.values.size(); ++i) io::put_f32(out, spec.values.data()[i]);
  return out;
}

LogMelSpectrogram decode_features(std::string_view bytes) {
  if (bytes.size() < kFeatureHeader + 8) throw FormatError("feature file: truncated header");
  if (bytes.substr(0, 13) != std::string_view(kFeatureMagic, 13)) throw FormatError("feature file: bad magic");
  if (bytes.substr(13, 3) != std::string_view(kFeatureMagic + 13, 3)) {
    throw FormatError("feature file: unsupported version");
  }
  const uint32_t t = io::get_u32(bytes, kFeatureHeader);
  const uint32_t m = io::get_u32(bytes, kFeatureHeader + 4);
  const std::size_t need = kFeatureHeader + 8 + static_cast<std::size_t>(t) * m * 4;
  if (bytes.size() != need) {
    throw FormatError("feature file: payload has " + std::to_string(bytes.size()) + " bytes, expected " +
                      std::to_string(need));
  }
  LogMelSpectrogram spec;
  spec.values.resize(t, m);
  for (std::size_t i = 0; i < static_cast<std::size_t>(t) * m; ++i) {
    spec.values.data()[i] = io::get_f32(bytes, kFeatureHeader + 8 + 4 * i);
  }
  return spec;
}

void save_features(const std::filesystem::path& path, const LogMelSpectrogram& spec) {
  io::write_file(path, encode_features(spec));
}

LogMelSpectrogram load_features(const std::filesystem::path& path) { return decode_features(io::read_file(path)); }

}  // namespace synthcap::dsp
