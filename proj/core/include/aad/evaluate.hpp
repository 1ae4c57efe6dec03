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
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "aad/partition.hpp"

namespace aad {

/// One (subject, configuration, repetition, fold) result. Accuracy is a fraction.
struct RunRecord {
  std::string dataset;
  std::string subject_id;
  Strategy strategy{Strategy::CrossTrial_I};
  double window_s{1.0};
  double stride_s{1.0};
  std::size_t k{1};
  std::string model;
  std::size_t repetition{0};
  std::size_t fold{0};
  double accuracy{0.0};
  std::size_t n_test_windows{0};
  std::uint64_t seed{0};
};

/// Everything that identifies a table cell except the subject.
struct ConfigKey {
  std::string dataset;
  Strategy strategy{Strategy::CrossTrial_I};
  double window_s{1.0};
  std::size_t k{1};
  std::string model;

  auto operator<=>(const ConfigKey&) const = default;
};

ConfigKey config_of(const RunRecord& r);
std::string model_name(std::size_t k);  // "EEGWaveNet-K<k>"

struct SubjectSummary {
  std::string subject_id;
  ConfigKey key;
  double mean_accuracy{0.0};
  double std_accuracy{0.0};  // sample std over the folds
  std::size_t n_records{0};
};

enum class StdConvention { Sample, Population };

struct ConfigSummary {
  ConfigKey key;
  std::size_t n_subjects{0};
  double mean_accuracy{0.0};
  double std_accuracy{0.0};
  std::vector<std::pair<std::string, double>> per_subject;
};

/// Raised when a (subject, configuration) lacks some (repetition, fold) cells.
class IncompleteGridError : public std::runtime_error {
 public:
  IncompleteGridError(const std::string& what, std::vector<std::string> missing)
      : std::runtime_error(what), missing_(std::move(missing)) {}
  const std::vector<std::string>& missing() const { return missing_; }

 private:
  std::vector<std::string> missing_;
};

/// Per-subject means over a complete repetitions x folds grid.
std::vector<SubjectSummary> summarize(std::span<const RunRecord> records, std::size_t n_repetitions = 4,
                                      std::size_t n_folds = kFolds);

/// Like summarize, but skips incomplete groups and reports them in `missing`.
std::vector<SubjectSummary> summarize_partial(std::span<const RunRecord> records, std::size_t n_repetitions,
                                              std::size_t n_folds, std::vector<std::string>& missing);

/// Across-subject mean and standard deviation per configuration.
std::vector<ConfigSummary> aggregate(std::span<const SubjectSummary> subjects,
                                     StdConvention convention = StdConvention::Sample);

struct WilcoxonResult {
  std::size_t n{0};          // pairs left after dropping zero differences
  double w_plus{0.0};        // rank sum of positive differences (a - b > 0)
  double w_minus{0.0};
  double statistic{0.0};     // w_plus - w_minus; changes sign when a and b swap
  double p_two_sided{1.0};
  bool exact{false};
  bool degenerate{false};    // every difference was zero
};

/// Paired signed-rank test of a against b. Exact for n <= 20, normal
/// approximation with tie and continuity correction above.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b, bool force_normal);

/// Ordinary least-squares slope of accuracy against window length.
double fit_accuracy_slope(std::span<const std::pair<double, double>> points);

struct Comparison {
  std::string dataset;
  Strategy strategy{Strategy::CrossTrial_I};
  double window_s{1.0};
  std::size_t k_a{1};
  std::size_t k_b{1};
  std::size_t n_subjects{0};
  double mean_diff{0.0};  // fraction, a - b
  std::optional<WilcoxonResult> test;
};

struct SlopeRow {
  std::string dataset;
  Strategy strategy{Strategy::CrossTrial_I};
  std::size_t k{1};
  std::optional<double> slope;  // percent per second; empty when fewer than two window lengths
};

/// Paired tests of every K against the smallest K at each (dataset, strategy, window).
std::vector<Comparison> compare_k(std::span<const SubjectSummary> subjects);
std::vector<SlopeRow> slope_table(std::span<const ConfigSummary> summaries);

// results.csv
std::string results_csv_header();
std::string to_csv_line(const RunRecord& r);
RunRecord parse_csv_line(const std::string& line);
void write_results_csv(std::span<const RunRecord> records, const std::filesystem::path& path);
std::vector<RunRecord> read_results_csv(const std::filesystem::path& path);
/// Records sorted by (dataset, subject, strategy, window, k, repetition, fold).
std::vector<RunRecord> canonical_order(std::vector<RunRecord> records);

/// Percent cell in the "74.04±14.36" style.
std::string format_cell(double mean_fraction, double std_fraction);

/// Writes results.csv, summary.csv and tables.md into out_dir.
void emit_tables(std::span<const RunRecord> records, std::span<const ConfigSummary> summaries,
                 std::span<const Comparison> comparisons, std::span<const SlopeRow> slopes,
                 const std::filesystem::path& out_dir, StdConvention convention = StdConvention::Sample);

}  // namespace aad
