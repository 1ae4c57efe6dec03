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

#include "aad/prototype.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <numeric>
#include <stdexcept>

namespace aad {

namespace {

std::atomic<std::uint64_t> g_built{0};

}  // namespace

void PrototypeConfig::validate() const {
  if (k < 1) throw std::invalid_argument("prototype k must be >= 1");
  if (!(weight_lo > 0.0 && weight_lo <= weight_hi))
    throw std::invalid_argument("prototype weights need 0 < weight_lo <= weight_hi");
}

PrototypeSample blend(std::span<const TfWindow> windows, std::span<const double> raw_weights) {
  if (windows.empty() || windows.size() != raw_weights.size())
    throw std::invalid_argument("blend needs one weight per window");
  const auto& anchor = windows.back();
  const std::size_t nc = anchor.n_channels(), len = anchor.length(), nf = anchor.n_freqs();
  double sum = 0.0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (!(raw_weights[i] > 0.0)) throw std::invalid_argument("blend weights must be positive");
    if (windows[i].label != anchor.label) throw std::invalid_argument("blend needs same-label windows");
    if (windows[i].n_channels() != nc || windows[i].length() != len || windows[i].n_freqs() != nf)
      throw std::invalid_argument("blend needs windows of identical shape");
    sum += raw_weights[i];
  }

  PrototypeSample out;
  out.label = anchor.label;
  out.energy.resize(nc * len * nf);
  out.provenance.reserve(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) out.provenance.emplace_back(windows[i], raw_weights[i] / sum);

  // Anchor term first, companions accumulated in draw order.
  const std::size_t block = len * nf;
  const double wa = out.provenance.back().second;
  for (std::size_t c = 0; c < nc; ++c) {
    const auto src = anchor.channel(c);
    double* dst = out.energy.data() + c * block;
    for (std::size_t i = 0; i < block; ++i) dst[i] = wa * src[i];
  }
  for (std::size_t j = 0; j + 1 < windows.size(); ++j) {
    const double w = out.provenance[j].second;
    for (std::size_t c = 0; c < nc; ++c) {
      const auto src = windows[j].channel(c);
      double* dst = out.energy.data() + c * block;
      for (std::size_t i = 0; i < block; ++i) dst[i] += w * src[i];
    }
  }
  return out;
}

PrototypePool::PrototypePool(std::span<const TfWindow> windows) : windows_(windows) {
  std::array<std::map<const TfTrial*, std::size_t>, 2> slot;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto l = static_cast<std::size_t>(windows[i].label);
    auto [it, fresh] = slot[l].emplace(windows[i].source, groups_[l].size());
    if (fresh) groups_[l].emplace_back();
    groups_[l][it->second].push_back(i);
    ++counts_[l];
  }
}

PrototypeSample make_prototype(const TfWindow& anchor, const PrototypePool& pool, const PrototypeConfig& cfg,
                               Rng& rng) {
  cfg.validate();
  const auto& groups = pool.by_trial(anchor.label);
  if (pool.count(anchor.label) == 0) throw std::invalid_argument("no training windows share the anchor's label");
  const auto all = pool.windows();

  std::vector<TfWindow> members;
  members.reserve(cfg.k);
  if (cfg.k > 1) {
    std::vector<std::size_t> other_trials;
    for (std::size_t g = 0; g < groups.size(); ++g)
      if (all[groups[g].front()].source != anchor.source) other_trials.push_back(g);

    if (cfg.distinct_trials && other_trials.size() >= cfg.k - 1) {
      // Partial Fisher-Yates: the first k-1 entries become a uniform draw without replacement.
      for (std::size_t i = 0; i + 1 < cfg.k; ++i) {
        const std::size_t j = i + rng.index(other_trials.size() - i);
        std::swap(other_trials[i], other_trials[j]);
        const auto& g = groups[other_trials[i]];
        members.push_back(all[g[rng.index(g.size())]]);
      }
    } else {
      // Too few trials: draw windows with replacement, preferring other trials.
      std::vector<std::size_t> candidates;
      for (std::size_t g : other_trials) candidates.insert(candidates.end(), groups[g].begin(), groups[g].end());
      if (candidates.empty())
        for (const auto& g : groups) candidates.insert(candidates.end(), g.begin(), g.end());
      for (std::size_t i = 0; i + 1 < cfg.k; ++i) members.push_back(all[candidates[rng.index(candidates.size())]]);
    }
  }
  members.push_back(anchor);

  std::vector<double> raw(cfg.k);
  for (double& w : raw) w = rng.uniform(cfg.weight_lo, cfg.weight_hi);
  g_built.fetch_add(1, std::memory_order_relaxed);
  return blend(members, raw);
}

void epoch_batches(std::span<const TfWindow> train, const PrototypeConfig& cfg, std::size_t batch_size, Rng& rng,
                   const std::function<void(std::span<const PrototypeSample>)>& consume) {
  if (train.empty()) throw std::invalid_argument("empty training set");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  const PrototypePool pool(train);
  if (pool.count(Direction::Left) == 0 || pool.count(Direction::Right) == 0)
    throw std::invalid_argument("training set lacks one of the two labels");

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span(order));

  std::vector<PrototypeSample> batch;
  batch.reserve(batch_size);
  for (std::size_t i = 0; i < order.size(); ++i) {
    batch.push_back(make_prototype(train[order[i]], pool, cfg, rng));
    if (batch.size() == batch_size || i + 1 == order.size()) {
      consume(batch);
      batch.clear();
    }
  }
}

std::uint64_t prototypes_built() { return g_built.load(std::memory_order_relaxed); }

}  // namespace aad
