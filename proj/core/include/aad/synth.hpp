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

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aad/core_data.hpp"

namespace aad {

/// Synthetic corpus: pink background noise, per-trial fingerprints (a channel
/// mixing perturbation and stable narrowband oscillators), and alpha-band
/// oscillators whose amplitude follows the attended side.
struct SynthConfig {
  std::size_t n_subjects{8};
  std::size_t n_trials{20};
  double trial_s{60.0};
  std::size_t n_channels{16};
  double fs_hz{128.0};
  /// rho_f: scales the mixing perturbation and the fingerprint oscillators.
  double fingerprint_strength{0.5};
  /// rho_a: alpha amplitude is (1 + rho_a) ipsilateral, (1 - rho_a) contralateral.
  double attention_strength{0.2};
  /// Standard deviation of the pink background per channel.
  double noise_scale{1.0};
  double alpha_lo_hz{8.0};
  double alpha_hi_hz{12.0};
  /// Alpha oscillator RMS relative to noise_scale before lateralization.
  double alpha_amplitude{1.0};
  /// Fingerprint oscillator RMS per unit rho_f, relative to noise_scale.
  double fingerprint_amplitude{1.0};
  std::size_t fingerprint_oscillators{2};
  std::uint64_t seed{1};

  void validate() const;
};

struct SynthTrialReport {
  std::string subject_id;
  std::string trial_id;
  Direction label{Direction::Left};
  /// Alpha-band power, left-hemisphere mean over right-hemisphere mean.
  double alpha_left_right_ratio{1.0};
  /// Alpha-band power on the attended side over the opposite side.
  double alpha_ipsi_contra_ratio{1.0};
  std::vector<double> fingerprint_freqs_hz;
  double mixing_perturbation_norm{0.0};
};

struct SynthReport {
  std::vector<SynthTrialReport> trials;
};

struct SynthCorpus {
  std::vector<Trial> trials;
  SynthReport report;
};

SynthCorpus generate(const SynthConfig& cfg);
/// Trials of one subject only; identical to the matching slice of generate().
SynthCorpus generate_subject(const SynthConfig& cfg, std::size_t subject_index);

std::string subject_name(std::size_t subject_index);

/// Mean power of x within [lo, hi] Hz after zero-phase band-pass filtering.
double band_power(std::span<const double> x, double fs_hz, double lo_hz, double hi_hz);

void write_synth_report(const SynthReport& report, const std::string& path);

/// Which generator parameter calibration searches over.
enum class CalibrationAxis { Attention, Fingerprint };

struct CalibrationOptions {
  CalibrationAxis axis{CalibrationAxis::Attention};
  double lo{0.0};
  double hi{0.9};
  double target_lo{0.65};
  double target_hi{0.75};
  std::size_t max_iterations{8};
  /// Seed offset for the held-out calibration cohort.
  std::uint64_t cohort_seed_offset{1000};
};

struct CalibrationResult {
  SynthConfig config;
  double accuracy{0.0};
  bool converged{false};
  bool reachable{true};
  std::size_t evaluations{0};
  std::vector<std::pair<double, double>> trace;  // (parameter value, accuracy)
};

/// Maps a generator config to mean decoding accuracy.
using CalibrationPipeline = std::function<double(const SynthConfig&)>;

/// Bisection on one generator parameter until the pipeline lands inside
/// [target_lo, target_hi]. Accuracy is assumed to increase with rho_a and
/// decrease with rho_f. Reports the best point found if the budget runs out.
CalibrationResult calibrate(const SynthConfig& cfg, const CalibrationPipeline& pipeline,
                            const CalibrationOptions& options = {});

}  // namespace aad
