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

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "aad/experiment.hpp"
#include "test_support.hpp"

namespace aad {
namespace {

namespace fs = std::filesystem;

// Eight small subjects with cheap features and a one-epoch budget.
constexpr const char* kTinyConfig = R"({
  "dataset": {"synth": {"n_subjects": 8, "n_trials": 8, "trial_s": 12, "n_channels": 4, "seed": 5}},
  "cwt": {"freqs_hz": [4, 8, 12, 16]},
  "strategies": ["I"],
  "window_lengths_s": [1.0],
  "k_values": [1, 10],
  "train": {"epochs": 1, "precision": "float64"},
  "seed": 11
})";

ExperimentConfig tiny(const fs::path& out = {}) {
  ExperimentConfig cfg = parse_experiment_config(kTinyConfig);
  cfg.out_dir = out;
  return cfg;
}

RunOptions quiet() {
  RunOptions o;
  o.verbose = false;
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string canonical_csv(std::vector<RunRecord> records) {
  std::string out;
  for (const auto& r : canonical_order(std::move(records))) out += to_csv_line(r) + '\n';
  return out;
}

TEST(Experiment, DefaultGridArithmetic) {
  const auto outcome = run_experiment(tiny(), quiet());
  EXPECT_EQ(outcome.exit_code(), 0);
  EXPECT_EQ(outcome.jobs_total, 256u);
  EXPECT_EQ(outcome.records.size(), 8u * 2u * 16u);
  std::set<JobKey> keys;
  for (const auto& r : outcome.records) {
    keys.insert(key_of(r));
    EXPECT_GE(r.accuracy, 0.0);
    EXPECT_LE(r.accuracy, 1.0);
    EXPECT_EQ(r.dataset, "synth");
  }
  EXPECT_EQ(keys.size(), 256u);
}

TEST(Experiment, WorkerCountDoesNotChangeResults) {
  ExperimentConfig cfg = tiny();
  cfg.subjects = {"S01", "S02"};
  cfg.workers = 1;
  const auto one = run_experiment(cfg, quiet());
  cfg.workers = 8;
  const auto eight = run_experiment(cfg, quiet());
  EXPECT_EQ(canonical_csv(one.records), canonical_csv(eight.records));
}

TEST(Experiment, GridSubsetsReproduceFullRunValues) {
  ExperimentConfig cfg = tiny();
  cfg.subjects = {"S03"};
  const auto full = run_experiment(cfg, quiet());
  cfg.k_values = {10};
  const auto subset = run_experiment(cfg, quiet());
  std::map<JobKey, std::string> by_key;
  for (const auto& r : full.records) by_key[key_of(r)] = to_csv_line(r);
  ASSERT_EQ(subset.records.size(), 16u);
  for (const auto& r : subset.records) EXPECT_EQ(by_key.at(key_of(r)), to_csv_line(r));
}

TEST(Experiment, ResumeSkipsCompletedJobsWithoutDuplicates) {
  const fs::path dir = test::scratch_dir("exp_resume");
  ExperimentConfig cfg = tiny(dir / "out");
  cfg.subjects = {"S01", "S02"};
  const auto full = run_experiment(cfg, quiet());
  ASSERT_EQ(full.records.size(), 64u);
  const std::string reference = slurp(dir / "out" / "results.csv");

  // Simulate a crash: keep the header and 20 rows, then a torn partial line.
  std::istringstream lines(reference);
  std::string line, kept;
  for (int i = 0; i < 21 && std::getline(lines, line); ++i) kept += line + '\n';
  std::ofstream(dir / "out" / "results.csv", std::ios::trunc) << kept << "synth,S02,I,1";
  fs::remove_all(dir / "out" / "summary.csv");

  RunOptions opt = quiet();
  opt.resume = true;
  const auto resumed = run_experiment(cfg, opt);
  EXPECT_EQ(resumed.exit_code(), 0);
  EXPECT_EQ(resumed.jobs_skipped, 20u);
  EXPECT_EQ(resumed.features_computed, 0u);
  EXPECT_GT(resumed.features_loaded, 0u);
  const auto rows = read_results_csv(dir / "out" / "results.csv");
  std::set<JobKey> keys;
  for (const auto& r : rows) EXPECT_TRUE(keys.insert(key_of(r)).second) << key_of(r).to_string();
  EXPECT_EQ(rows.size(), 64u);
  EXPECT_EQ(slurp(dir / "out" / "results.csv"), reference);
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.csv"));
}

TEST(Experiment, ResumeRejectsTornRowsOnlyAtTheEnd) {
  const fs::path dir = test::scratch_dir("exp_torn");
  ExperimentConfig cfg = tiny(dir / "out");
  cfg.subjects = {"S01"};
  cfg.k_values = {1};
  fs::create_directories(dir / "out");
  std::ofstream(dir / "out" / "results.csv") << results_csv_header() << "\nnot,a,row\n" << results_csv_header() << '\n';
  RunOptions opt = quiet();
  opt.resume = true;
  EXPECT_THROW(run_experiment(cfg, opt), std::runtime_error);
}

TEST(Experiment, ShortWindowsUseTheirOwnLengthAsStride) {
  ExperimentConfig cfg = tiny();
  cfg.subjects = {"S01"};
  cfg.window_lengths_s = {0.5, 1.0};
  cfg.k_values = {1};
  const auto outcome = run_experiment(cfg, quiet());
  ASSERT_EQ(outcome.records.size(), 32u);
  for (const auto& r : outcome.records) {
    EXPECT_DOUBLE_EQ(r.stride_s, r.window_s == 0.5 ? 0.5 : 1.0);
    // 8 trials of 12 s, two test trials per fold.
    EXPECT_EQ(r.n_test_windows, r.window_s == 0.5 ? 2u * 24u : 2u * 12u);
  }
  EXPECT_DOUBLE_EQ(job_stride(0.5, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(job_stride(3.0, 1.0), 1.0);
}

TEST(Experiment, FeaturesAreComputedOncePerTrial) {
  const fs::path dir = test::scratch_dir("exp_cache");
  ExperimentConfig cfg = tiny(dir / "out");
  cfg.subjects = {"S01", "S02"};
  cfg.strategies = {Strategy::CrossTrial_I, Strategy::WithinTrialSegments_II, Strategy::WithinTrialWindows_III};
  cfg.n_repetitions = 1;
  const auto before = feature_computations();
  const auto first = run_experiment(cfg, quiet());
  EXPECT_EQ(first.exit_code(), 0);
  EXPECT_EQ(feature_computations() - before, 16u);
  EXPECT_EQ(first.features_computed, 16u);
  std::size_t cached = 0;
  for (const auto& e : fs::directory_iterator(dir / "out" / "cache")) cached += e.path().extension() == ".tf";
  EXPECT_EQ(cached, 16u);

  const auto second = run_experiment(cfg, quiet());
  EXPECT_EQ(feature_computations() - before, 16u);
  EXPECT_EQ(second.features_loaded, 16u);
  EXPECT_EQ(canonical_csv(first.records), canonical_csv(second.records));

  // A different feature config must not hit the old cache entries.
  cfg.cwt.freqs_hz = {4, 8, 12, 20};
  const auto third = run_experiment(cfg, quiet());
  EXPECT_EQ(third.features_computed, 16u);
}

TEST(Experiment, OutputsLossLogAndCheckpoints) {
  const fs::path dir = test::scratch_dir("exp_outputs");
  ExperimentConfig cfg = tiny(dir / "out");
  cfg.subjects = {"S01"};
  cfg.k_values = {1};
  cfg.n_repetitions = 1;
  cfg.train.epochs = 3;
  cfg.save_checkpoints = true;
  const auto outcome = run_experiment(cfg, quiet());
  ASSERT_EQ(outcome.records.size(), 4u);
  const std::string losses = slurp(dir / "out" / "losses.csv");
  EXPECT_EQ(std::count(losses.begin(), losses.end(), '\n'), 1 + 4 * 3);
  EXPECT_NE(losses.find("S01/I/1s/K1/r0/f2,2,"), std::string::npos);
  const auto model = read_checkpoint(dir / "out" / "models" / "S01_I_1s_K1_r0_f0.ckpt");
  EXPECT_EQ(model.shape.c_in, 4u);
  EXPECT_TRUE(fs::exists(dir / "out" / "tables.md"));
}

TEST(Experiment, ManifestDatasetRunsEndToEnd) {
  const fs::path dir = test::scratch_dir("exp_manifest");
  ExperimentConfig base = tiny();
  base.synth.n_subjects = 2;
  write_synth_corpus(base.synth, dir / "corpus");
  std::ofstream(dir / "run.json") << R"({"dataset": {"manifest": "corpus/manifest.json"},
    "cwt": {"freqs_hz": [4, 8, 12, 16]}, "strategies": ["I", "III"], "window_lengths_s": [1, 3],
    "k_values": [1, 10], "n_repetitions": 1, "train": {"epochs": 1}, "out_dir": "out"})";
  const ExperimentConfig cfg = load_experiment_config(dir / "run.json");
  EXPECT_EQ(cfg.dataset_name(), "synth");
  const auto outcome = run_experiment(cfg, quiet());
  EXPECT_EQ(outcome.exit_code(), 0);
  EXPECT_EQ(outcome.records.size(), 2u * 2u * 2u * 2u * 4u);
  const std::string md = slurp(dir / "out" / "tables.md");
  EXPECT_NE(md.find("| Model | synth I | synth III |"), std::string::npos);
  EXPECT_NE(md.find("| EEGWaveNet-K10 |"), std::string::npos);
}

TEST(Experiment, ConfigErrors) {
  EXPECT_THROW(parse_experiment_config(R"({"bogus": 1})"), ConfigError);
  EXPECT_THROW(parse_experiment_config(R"({"train": {"epochz": 1}})"), ConfigError);
  EXPECT_THROW(parse_experiment_config(R"({"strategies": ["IV"]})"), ConfigError);
  EXPECT_THROW(parse_experiment_config(R"({"k_values": []})"), ConfigError);
  EXPECT_THROW(parse_experiment_config(R"({"k_values": [1, 1]})"), ConfigError);
  EXPECT_THROW(parse_experiment_config(R"({"window_lengths_s": [0.55]})"), ConfigError);
  EXPECT_THROW(parse_experiment_config("{not json"), ConfigError);
  EXPECT_THROW(load_experiment_config("/nonexistent/config.json"), ConfigError);
  EXPECT_EQ(parse_strategy_list("I,III"), (std::vector<Strategy>{Strategy::CrossTrial_I, Strategy::WithinTrialWindows_III}));
  EXPECT_EQ(parse_real_list("0.5,1"), (std::vector<double>{0.5, 1.0}));
  EXPECT_EQ(parse_size_list("1,10"), (std::vector<std::size_t>{1, 10}));
  EXPECT_THROW(parse_size_list("1,x"), ConfigError);
}

TEST(Experiment, SeedsDependOnJobIdentityOnly) {
  const JobKey a{"S01", Strategy::CrossTrial_I, 1.0, 10, 0, 2};
  EXPECT_EQ(a.to_string(), "S01/I/1s/K10/r0/f2");
  JobKey b = a;
  b.fold = 3;
  EXPECT_EQ(job_seed(7, a), job_seed(7, a));
  EXPECT_NE(job_seed(7, a), job_seed(7, b));
  EXPECT_NE(job_seed(7, a), job_seed(8, a));
  EXPECT_EQ(plan_seed(7, "S01", Strategy::CrossTrial_I, 1.0), plan_seed(7, "S01", Strategy::CrossTrial_I, 1.0));
  EXPECT_NE(plan_seed(7, "S01", Strategy::CrossTrial_I, 1.0), plan_seed(7, "S02", Strategy::CrossTrial_I, 1.0));
}

#ifdef AAD_BENCH_EXE

int run_tool(const std::string& args) {
  const std::string cmd = std::string(AAD_BENCH_EXE) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
  return out;
}

TEST(Cli, SynthDefaultCorpusLayout) {
  const fs::path dir = test::scratch_dir("cli_synth");
  ASSERT_EQ(run_tool("synth --seed 7 --out " + (dir / "a").string()), 0);
  std::size_t trials = 0;
  for (const auto& e : fs::directory_iterator(dir / "a" / "trials")) trials += e.path().extension() == ".eegtrial";
  EXPECT_EQ(trials, 160u);
  EXPECT_TRUE(fs::exists(dir / "a" / "manifest.json"));
  EXPECT_EQ(load_manifest(dir / "a" / "manifest.json").trials.size(), 160u);
  ASSERT_EQ(run_tool("synth --seed 7 --out " + (dir / "b").string()), 0);
  EXPECT_TRUE(tree(dir / "a") == tree(dir / "b"));
}

TEST(Cli, SynthWithoutAttentionHasBalancedAlpha) {
  const fs::path dir = test::scratch_dir("cli_synth_rho0");
  std::ofstream(dir / "small.json") << R"({"n_subjects": 1, "n_trials": 20, "trial_s": 20})";
  ASSERT_EQ(run_tool("synth --config " + (dir / "small.json").string() + " --rho-a 0 --out " + (dir / "c").string()), 0);
  const std::string report = slurp(dir / "c" / "synth_report.json");
  const auto m = load_manifest(dir / "c" / "manifest.json");
  ASSERT_EQ(m.trials.size(), 20u);
  // Mean left/right ratio straight from the written trials.
  double mean = 0.0;
  for (const auto& e : m.trials) {
    const Trial t = read_trial(e.path);
    double l = 0.0, r = 0.0;
    for (std::size_t c = 0; c < t.n_channels; ++c) {
      std::vector<double> x(t.n_samples);
      for (std::size_t s = 0; s < t.n_samples; ++s) x[s] = t.at(s, c);
      (t.hemisphere[c] == Hemisphere::Left ? l : r) += band_power(x, t.fs_hz, 8.0, 12.0);
    }
    mean += l / r / 20.0;
  }
  EXPECT_NEAR(mean, 1.0, 0.1);
  EXPECT_NE(report.find("alpha_left_right_ratio"), std::string::npos);
}

TEST(Cli, RunAndReport) {
  const fs::path dir = test::scratch_dir("cli_run");
  std::ofstream(dir / "cfg.json") << kTinyConfig;
  ASSERT_EQ(run_tool("run --quiet --config " + (dir / "cfg.json").string() + " --out " + (dir / "out").string() +
                     " --strategies I,III --windows 1 --k 1,10 --workers 2"),
            0);
  EXPECT_EQ(read_results_csv(dir / "out" / "results.csv").size(), 8u * 2u * 2u * 16u);
  ASSERT_EQ(run_tool("report --results " + (dir / "out" / "results.csv").string() + " --out " +
                     (dir / "rep").string()),
            0);
  const std::string md = slurp(dir / "rep" / "tables.md");
  std::size_t wilcoxon_rows = 0;
  for (std::size_t pos = 0; (pos = md.find("K10 vs K1", pos)) != std::string::npos; ++pos) ++wilcoxon_rows;
  EXPECT_EQ(wilcoxon_rows, 2u);
  EXPECT_NE(md.find("| synth | I | EEGWaveNet-K1 | n/a |"), std::string::npos);
  EXPECT_EQ(slurp(dir / "rep" / "summary.csv"), slurp(dir / "out" / "summary.csv"));
}

TEST(Cli, ReportWarnsOnIncompleteGrid) {
  const fs::path dir = test::scratch_dir("cli_report_partial");
  std::ofstream(dir / "cfg.json") << kTinyConfig;
  ASSERT_EQ(run_tool("run --quiet --config " + (dir / "cfg.json").string() + " --out " + (dir / "out").string() +
                     " --k 1"),
            0);
  auto rows = read_results_csv(dir / "out" / "results.csv");
  rows.pop_back();
  write_results_csv(rows, dir / "partial.csv");
  EXPECT_EQ(run_tool("report --results " + (dir / "partial.csv").string() + " --out " + (dir / "rep").string()), 1);
  EXPECT_TRUE(fs::exists(dir / "rep" / "tables.md"));
  EXPECT_TRUE(fs::exists(dir / "rep" / "warnings.txt"));
}

TEST(Cli, ExitCodes) {
  const fs::path dir = test::scratch_dir("cli_exit");
  std::ofstream(dir / "bad.json") << R"({"strategies": ["I"], "mystery": true})";
  EXPECT_EQ(run_tool("run --config " + (dir / "bad.json").string() + " --out " + (dir / "o").string()), 2);
  EXPECT_EQ(run_tool("run"), 2);
  EXPECT_EQ(run_tool("frobnicate"), 2);
  EXPECT_EQ(run_tool("--help"), 0);
}

#endif

}  // namespace
}  // namespace aad
