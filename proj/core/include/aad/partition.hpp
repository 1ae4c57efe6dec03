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

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "aad/core_data.hpp"

namespace aad {

/// Data-partitioning strategy for 4-fold cross-validation.
///   CrossTrial_I            whole trials are held out
///   WithinTrialSegments_II  one quarter of every trial is held out
///   WithinTrialWindows_III  a random quarter of all windows is held out
enum class Strategy : std::uint8_t { CrossTrial_I, WithinTrialSegments_II, WithinTrialWindows_III };

std::string_view to_string(Strategy s);  // "I", "II", "III"
Strategy strategy_from_string(std::string_view s);

inline constexpr std::size_t kFolds = 4;

struct FoldPlan {
  std::size_t repetition{0};
  std::size_t fold_index{0};
  std::vector<TfWindow> train;
  std::vector<TfWindow> test;
  std::uint64_t seed{0};
};

/// Stride actually used for a strategy. Strategy III never lets windows overlap.
double effective_stride(Strategy strategy, double window_s, double stride_s);

std::vector<FoldPlan> plan_folds(std::span<const TfTrial> trials, Strategy strategy, double window_s,
                                 double stride_s, std::uint64_t seed);

/// n_repetitions independent draws with seeds base_seed + r.
std::vector<FoldPlan> repeat_plans(std::span<const TfTrial> trials, Strategy strategy, double window_s,
                                   double stride_s, std::size_t n_repetitions, std::uint64_t base_seed);

}  // namespace aad
