// Copyright 2026 The aad-bench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "aad/core_data.hpp"

namespace aad {

struct PreprocessConfig {
  double target_fs_hz{128.0};
  double band_lo_hz{1.0};
  double band_hi_hz{50.0};
  /// Total band-pass order: order/2 high-pass poles plus order/2 low-pass poles.
  int filter_order{4};
  bool zero_phase{true};

  void validate() const;
};

struct CwtConfig {
  std::vector<double> freqs_hz{default_freqs()};
  double frames_per_s{10.0};
  double wavelet_cycles{7.0};
  double energy_floor{1e-12};
  /// Wavelet truncated at +/- support_sigmas Gaussian widths.
  double support_sigmas{4.0};

  static std::vector<double> default_freqs();  // 2..50 Hz in 1 Hz steps
  void validate(double fs_hz) const;
};

// ---------------------------------------------------------------------------
// IIR filtering

/// Second-order section in direct-form II transposed, a0 normalized to 1.
struct Biquad {
  double b0{1}, b1{0}, b2{0};
  double a1{0}, a2{0};

  bool stable() const;
};

using Sos = std::vector<Biquad>;

enum class FilterKind { LowPass, HighPass };

/// Digital Butterworth via the bilinear transform with pre-warping.
Sos butterworth(FilterKind kind, int order, double cutoff_hz, double fs_hz);
/// Band-pass of total order `order` (even): cascade of high-pass and low-pass halves.
Sos butterworth_bandpass(int order, double lo_hz, double hi_hz, double fs_hz);

/// Analytic |H(f)| of butterworth() designs, used by tests and docs.
double butterworth_magnitude(FilterKind kind, int order, double cutoff_hz, double fs_hz, double f_hz);

/// Causal filtering of one signal.
std::vector<double> sosfilt(const Sos& sos, std::span<const double> x);
/// Forward-backward filtering with odd-extension padding and steady-state
/// initial conditions. Zero phase; squared magnitude response.
std::vector<double> sosfiltfilt(const Sos& sos, std::span<const double> x, std::size_t padlen);

/// Rational resampling by up/down with a Kaiser-windowed sinc polyphase bank.
std::vector<double> resample_rational(std::span<const double> x, std::size_t up, std::size_t down);

// ---------------------------------------------------------------------------
// Pipeline operations

/// Anti-aliased downsampling, band-pass, then average re-reference.
Trial preprocess(const Trial& trial, const PreprocessConfig& cfg);

/// Complex Morlet CWT at frame instants, |.|^2 floored, natural log.
TfTrial cwt_log_energy(const Trial& trial, const CwtConfig& cfg);

/// Half support of the lowest-frequency wavelet, in seconds.
double cwt_half_support_s(const CwtConfig& cfg);

/// Maximal run of windows [k*stride, k*stride + T_w) inside the trial.
std::vector<TfWindow> segment_windows(const TfTrial& tf, double window_s, double stride_s);

/// Converts a duration to a whole number of frames; throws if it is not one.
std::size_t frames_for(double seconds, double frames_per_s);

}  // namespace aad
