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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aad/dsp.hpp"
#include "aad/evaluate.hpp"
#include "aad/partition.hpp"
#include "aad/synth.hpp"
#include "aad/trainer.hpp"

namespace aad {

/// Raised for malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  /// Real data when set; otherwise the synthetic corpus described by `synth`.
  std::optional<std::filesystem::path> manifest;
  SynthConfig synth{};
  PreprocessConfig preprocess{};
  CwtConfig cwt{};
  std::vector<Strategy> strategies{Strategy::CrossTrial_I, Strategy::WithinTrialSegments_II,
                                   Strategy::WithinTrialWindows_III};
  std::vector<double> window_lengths_s{0.5, 1.0, 3.0, 5.0};
  /// Requested stride; windows shorter than it use their own length as stride.
  double stride_s{1.0};
  std::vector<std::size_t> k_values{1, 10};
  TrainConfig train{default_train()};
  std::size_t n_repetitions{4};
  std::size_t workers{1};
  /// Empty: nothing is written and no feature cache is used.
  std::filesystem::path out_dir;
  /// Writes every trained model to out_dir/models.
  bool save_checkpoints{false};
  std::uint64_t seed{0};
  /// Optional subject subset; empty means every subject.
  std::vector<std::string> subjects;

  static TrainConfig default_train();
  void validate() const;
  std::string dataset_name() const;
};

/// Parses the JSON config format; relative paths resolve against base_dir.
ExperimentConfig parse_experiment_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
/// Accepts a bare SynthConfig object, {"synth": {...}} or a full experiment config.
SynthConfig parse_synth_config(std::string_view json_text);
std::string synth_config_json(const SynthConfig& cfg);

/// Comma-separated list helpers for command-line grid overrides.
std::vector<Strategy> parse_strategy_list(std::string_view text);
std::vector<double> parse_real_list(std::string_view text);
std::vector<std::size_t> parse_size_list(std::string_view text);

struct JobKey {
  std::string subject;
  Strategy strategy{Strategy::CrossTrial_I};
  double window_s{1.0};
  std::size_t k{1};
  std::size_t repetition{0};
  std::size_t fold{0};

  auto operator<=>(const JobKey&) const = default;
  std::string to_string() const;
};

JobKey key_of(const RunRecord& r);

/// Stride used for a window length: the configured stride, capped at the window.
double job_stride(double window_s, double stride_s);
/// Seed of the fold partition; independent of K so K variants share folds.
std::uint64_t plan_seed(std::uint64_t master, std::string_view subject, Strategy strategy, double window_s);
/// Seed of one training job.
std::uint64_t job_seed(std::uint64_t master, const JobKey& key);

struct RunOptions {
  bool resume{false};
  bool verbose{true};
  /// Overrides the feature cache directory; falls back to AAD_BENCH_CACHE_DIR, then out_dir/cache.
  std::optional<std::filesystem::path> cache_dir;
};

struct JobFailure {
  JobKey key;
  std::string message;
};

struct RunOutcome {
  std::vector<RunRecord> records;  // every record of the run, canonical order, including resumed ones
  std::vector<JobFailure> failures;
  std::size_t jobs_total{0};
  std::size_t jobs_skipped{0};
  std::size_t features_computed{0};
  std::size_t features_loaded{0};

  int exit_code() const { return failures.empty() ? 0 : 1; }
};

/// Expands and executes the job grid. Throws ConfigError on invalid configuration.
RunOutcome run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

/// Process-wide count of CWT feature computations performed by run_experiment.
std::size_t feature_computations();

/// Writes the synthetic corpus as EEGTRIAL files plus manifest.json and synth_report.json.
DatasetManifest write_synth_corpus(const SynthConfig& cfg, const std::filesystem::path& out_dir);

struct ReportOutcome {
  std::vector<std::string> warnings;
  std::size_t n_records{0};
};

/// Rebuilds summary.csv and tables.md from a results file.
ReportOutcome report_results(const std::filesystem::path& results_csv, const std::filesystem::path& out_dir);

/// Mean accuracy of the K=1, Strategy I, 1 s pipeline on a synthetic config.
double synth_pipeline_accuracy(const SynthConfig& synth, const ExperimentConfig& base);

}  // namespace aad
