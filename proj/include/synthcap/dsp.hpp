// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

// Log-mel front end and SpecAugment masking.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "synthcap/audio.hpp"

namespace synthcap::dsp {

using RealMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using FeatureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kPowerFloor = 1e-10;
// ln(1e-10) rounded to f32; the smallest value any feature cell can hold.
inline const float kLogFloor = static_cast<float>(std::log(kPowerFloor));

enum class Window { kHann, kRect };

// Periodic Hann (0.5 - 0.5 cos(2 pi n / win)) or all-ones.
std::vector<double> make_window(Window window, int win);

// Frames cover [t*hop, t*hop + win); no padding, so T = 1 + (N - win) / hop.
// Each frame is windowed, zero-padded to n_fft, and the magnitudes of the
// one-sided DFT (n_fft/2 + 1 bins) are returned.
RealMatrix stft_magnitude(std::span<const float> samples, int n_fft, int win, int hop, Window window);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// HTK-style triangles, linear on the mel axis, each row rescaled to a peak of
// exactly 1.0. Rows ascend by centre frequency.
RealMatrix mel_filterbank(int n_mels, int n_fft, int sample_rate, double fmin, double fmax);
std::vector<double> mel_center_frequencies(int n_mels, double fmin, double fmax);

struct LogMelConfig {
  int n_fft = 512;
  int win = 400;
  int hop = 160;
  int n_mels = 64;
  double fmin = 50.0;
  double fmax = 8000.0;
  Window window = Window::kHann;
};

struct LogMelSpectrogram {
  FeatureMatrix values;  // T x M
  double frame_hop_s = 0.01;
  double window_s = 0.025;
  int sample_rate = 16000;

  Eigen::Index frames() const { return values.rows(); }
  Eigen::Index bins() const { return values.cols(); }
};

// ln(max(filterbank . |STFT|^2, 1e-10)).
LogMelSpectrogram log_mel(const AudioClip& clip, const LogMelConfig& cfg = {});

struct SpecAugmentConfig {
  int n_time_masks = 2;
  int max_time_width = 40;
  int n_freq_masks = 2;
  int max_freq_width = 8;
};

struct AppliedMask {
  bool time_axis = true;
  int start = 0;
  int width = 0;
};

// Frequency masks are drawn first, then time masks, all from one
// xoshiro256** stream seeded with `seed`. Widths above the axis length are
// clamped. Masked cells are set to kLogFloor.
LogMelSpectrogram spec_augment(const LogMelSpectrogram& spec, const SpecAugmentConfig& cfg, uint64_t seed,
                               std::vector<AppliedMask>* applied = nullptr);

// Feature cache: 16-byte header ("SYNTHCAP_LMEL" then version bytes 00 01 00),
// u32 T, u32 M, then T*M f32 values, row-major, little-endian. Framing
// metadata is not stored; loaded spectrograms carry the LogMelConfig defaults.
std::string encode_features(const LogMelSpectrogram& spec);
LogMelSpectrogram decode_features(std::string_view bytes);
void save_features(const std::filesystem::path& path, const LogMelSpectrogram& spec);
LogMelSpectrogram load_features(const std::filesystem::path& path);

}  // namespace synthcap::dsp
