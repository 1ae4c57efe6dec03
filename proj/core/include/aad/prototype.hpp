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
#include <utility>
#include <vector>

#include "aad/core_data.hpp"
#include "aad/rng.hpp"

namespace aad {

struct PrototypeConfig {
  /// Number of same-label windows blended into one prototype.
  std::size_t k{1};
  double weight_lo{0.1};
  double weight_hi{1.0};
  /// Draw constituents from distinct trials when enough trials exist.
  bool distinct_trials{true};

  void validate() const;
};

/// A convex combination of same-label windows.
///
/// energy has the window layout (channels x T_w x F). provenance lists
/// the constituents with their normalized weights; the anchor comes last.
struct PrototypeSample {
  std::vector<double> energy;
  Direction label{Direction::Left};
  std::vector<std::pair<TfWindow, double>> provenance;
};

/// Weighted sum of windows with raw (unnormalized) positive weights.
/// Weights are normalized to sum to one before blending.
PrototypeSample blend(std::span<const TfWindow> windows, std::span<const double> raw_weights);

/// Training windows indexed by label and by source trial.
class PrototypePool {
 public:
  explicit PrototypePool(std::span<const TfWindow> windows);

  std::span<const TfWindow> windows() const { return windows_; }
  /// Indices of windows with the given label, grouped by trial.
  const std::vector<std::vector<std::size_t>>& by_trial(Direction label) const {
    return groups_[static_cast<std::size_t>(label)];
  }
  std::size_t count(Direction label) const { return counts_[static_cast<std::size_t>(label)]; }

 private:
  std::span<const TfWindow> windows_;
  std::array<std::vector<std::vector<std::size_t>>, 2> groups_;
  std::array<std::size_t, 2> counts_{0, 0};
};

/// Draws K-1 companions for the anchor, K weights from Uniform[lo, hi], and blends.
PrototypeSample make_prototype(const TfWindow& anchor, const PrototypePool& pool, const PrototypeConfig& cfg,
                               Rng& rng);

/// One epoch: every training window anchors exactly one prototype, in shuffled
/// order, delivered in batches of batch_size (the last may be short).
void epoch_batches(std::span<const TfWindow> train, const PrototypeConfig& cfg, std::size_t batch_size, Rng& rng,
                   const std::function<void(std::span<const PrototypeSample>)>& consume);

/// Total prototypes built by make_prototype in this process. Test instrumentation.
std::uint64_t prototypes_built();

}  // namespace aad
