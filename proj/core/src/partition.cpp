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

#include "aad/partition.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "aad/dsp.hpp"
#include "aad/rng.hpp"

namespace aad {

namespace {

// Splits [0, n) into kFolds contiguous groups, remainder going to the first groups.
std::vector<std::size_t> group_bounds(std::size_t n) {
  std::vector<std::size_t> bounds{0};
  const std::size_t base = n / kFolds, extra = n % kFolds;
  for (std::size_t k = 0; k < kFolds; ++k) bounds.push_back(bounds.back() + base + (k < extra ? 1 : 0));
  return bounds;
}

std::vector<FoldPlan> plan_cross_trial(std::span<const TfTrial> trials, double window_s, double stride_s,
                                       std::uint64_t seed) {
  if (trials.size() < kFolds) throw std::invalid_argument("Strategy I needs at least 4 trials");
  std::vector<std::size_t> order(trials.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span(order));
  const auto bounds = group_bounds(order.size());

  std::vector<std::size_t> group_of(trials.size());
  for (std::size_t k = 0; k < kFolds; ++k)
    for (std::size_t i = bounds[k]; i < bounds[k + 1]; ++i) group_of[order[i]] = k;

  std::vector<FoldPlan> plans(kFolds);
  for (std::size_t k = 0; k < kFolds; ++k) {
    plans[k].fold_index = k;
    plans[k].seed = seed;
  }
  for (std::size_t t = 0; t < trials.size(); ++t) {
    const auto windows = segment_windows(trials[t], window_s, stride_s);
    for (std::size_t k = 0; k < kFolds; ++k) {
      auto& dst = group_of[t] == k ? plans[k].test : plans[k].train;
      dst.insert(dst.end(), windows.begin(), windows.end());
    }
  }
  return plans;
}

std::vector<FoldPlan> plan_segments(std::span<const TfTrial> trials, double window_s, double stride_s,
                                    std::uint64_t seed) {
  if (trials.empty()) throw std::invalid_argument("Strategy II needs at least one trial");
  const std::size_t len = frames_for(window_s, trials.front().frames_per_s);
  std::vector<FoldPlan> plans(kFolds);
  for (std::size_t k = 0; k < kFolds; ++k) {
    plans[k].fold_index = k;
    plans[k].seed = seed;
  }
  for (const auto& trial : trials) {
    if (trial.n_frames < kFolds * len)
      throw std::invalid_argument("trial " + trial.trial_id + " is shorter than 4 windows");
    const auto windows = segment_windows(trial, window_s, stride_s);
    const std::size_t seg = trial.n_frames / kFolds;
    for (std::size_t k = 0; k < kFolds; ++k) {
      const std::size_t lo = k * seg;
      const std::size_t hi = k + 1 == kFolds ? trial.n_frames : (k + 1) * seg;
      std::vector<TfWindow> test;
      for (const auto& w : windows)
        if (w.start >= lo && w.end <= hi) test.push_back(w);
      if (test.empty()) throw std::invalid_argument("segment holds no whole window in trial " + trial.trial_id);
      // Test windows are contiguous in onset order, so their union is one interval.
      const std::size_t cover_lo = test.front().start, cover_hi = test.back().end;
      for (const auto& w : windows) {
        const bool is_test = w.start >= lo && w.end <= hi;
        const bool touches = w.start < cover_hi && cover_lo < w.end;
        if (!is_test && !touches) plans[k].train.push_back(w);
      }
      plans[k].test.insert(plans[k].test.end(), test.begin(), test.end());
    }
  }
  return plans;
}

std::vector<FoldPlan> plan_pooled_windows(std::span<const TfTrial> trials, double window_s, double stride_s,
                                          std::uint64_t seed) {
  std::vector<TfWindow> pool;
  for (const auto& trial : trials) {
    const auto windows = segment_windows(trial, window_s, stride_s);
    pool.insert(pool.end(), windows.begin(), windows.end());
  }
  if (pool.size() < kFolds) throw std::invalid_argument("Strategy III needs at least 4 windows");
  Rng rng(seed);
  rng.shuffle(std::span(pool));
  const auto bounds = group_bounds(pool.size());

  std::vector<FoldPlan> plans(kFolds);
  for (std::size_t k = 0; k < kFolds; ++k) {
    plans[k].fold_index = k;
    plans[k].seed = seed;
    for (std::size_t g = 0; g < kFolds; ++g) {
      auto& dst = g == k ? plans[k].test : plans[k].train;
      dst.insert(dst.end(), pool.begin() + static_cast<std::ptrdiff_t>(bounds[g]),
                 pool.begin() + static_cast<std::ptrdiff_t>(bounds[g + 1]));
    }
  }
  return plans;
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::CrossTrial_I: return "I";
    case Strategy::WithinTrialSegments_II: return "II";
    case Strategy::WithinTrialWindows_III: return "III";
  }
  return "?";
}

Strategy strategy_from_string(std::string_view s) {
  if (s == "I" || s == "1") return Strategy::CrossTrial_I;
  if (s == "II" || s == "2") return Strategy::WithinTrialSegments_II;
  if (s == "III" || s == "3") return Strategy::WithinTrialWindows_III;
  throw std::invalid_argument("unknown strategy '" + std::string(s) + "'");
}

double effective_stride(Strategy strategy, double window_s, double stride_s) {
  return strategy == Strategy::WithinTrialWindows_III ? std::max(stride_s, window_s) : stride_s;
}

std::vector<FoldPlan> plan_folds(std::span<const TfTrial> trials, Strategy strategy, double window_s,
                                 double stride_s, std::uint64_t seed) {
  if (!trials.empty()) {
    for (const auto& t : trials)
      if (t.frames_per_s != trials.front().frames_per_s)
        throw std::invalid_argument("all trials must share one frame rate");
  }
  switch (strategy) {
    case Strategy::CrossTrial_I: return plan_cross_trial(trials, window_s, stride_s, seed);
    case Strategy::WithinTrialSegments_II: return plan_segments(trials, window_s, stride_s, seed);
    case Strategy::WithinTrialWindows_III:
      return plan_pooled_windows(trials, window_s, effective_stride(strategy, window_s, stride_s), seed);
  }
  throw std::invalid_argument("unknown strategy");
}

std::vector<FoldPlan> repeat_plans(std::span<const TfTrial> trials, Strategy strategy, double window_s,
                                   double stride_s, std::size_t n_repetitions, std::uint64_t base_seed) {
  std::vector<FoldPlan> all;
  for (std::size_t r = 0; r < n_repetitions; ++r) {
    auto plans = plan_folds(trials, strategy, window_s, stride_s, base_seed + r);
    for (auto& p : plans) {
      p.repetition = r;
      all.push_back(std::move(p));
    }
  }
  return all;
}

}  // namespace aad
