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

#include <algorithm>
#include <set>
#include <vector>

#include "aad/dsp.hpp"
#include "aad/prototype.hpp"
#include "test_support.hpp"

namespace aad {
namespace {

std::vector<double> flatten(const TfWindow& w) {
  std::vector<double> out;
  for (std::size_t c = 0; c < w.n_channels(); ++c) {
    const auto ch = w.channel(c);
    out.insert(out.end(), ch.begin(), ch.end());
  }
  return out;
}

std::vector<TfWindow> windows_of(const std::vector<TfTrial>& trials, double window_s = 1.0) {
  std::vector<TfWindow> out;
  for (const auto& t : trials) {
    const auto ws = segment_windows(t, window_s, 1.0);
    out.insert(out.end(), ws.begin(), ws.end());
  }
  return out;
}

TEST(Prototype, SingleConstituentReproducesAnchor) {
  const auto trials = test::make_subject(4, 100, 3, 5);
  const auto ws = windows_of(trials);
  const PrototypePool pool(ws);
  PrototypeConfig cfg;
  cfg.k = 1;
  Rng rng(1);
  for (const auto& w : ws) {
    const auto p = make_prototype(w, pool, cfg, rng);
    EXPECT_EQ(p.energy, flatten(w));
    ASSERT_EQ(p.provenance.size(), 1u);
    EXPECT_EQ(p.provenance[0].second, 1.0);
    EXPECT_EQ(p.label, w.label);
  }
}

TEST(Prototype, PinnedWeightsGiveWeightedSum) {
  const auto trials = test::make_subject(6, 50, 2, 4);
  const TfWindow a{&trials[0], 0, 10, trials[0].label};
  const TfWindow b{&trials[2], 10, 20, trials[2].label};
  const TfWindow c{&trials[4], 20, 30, trials[4].label};
  const std::vector<TfWindow> members{b, c, a};
  const std::vector<double> raw{0.3, 0.2, 0.5};
  const auto p = blend(members, raw);
  ASSERT_EQ(p.provenance.size(), 3u);
  EXPECT_DOUBLE_EQ(p.provenance[0].second, 0.3);
  EXPECT_DOUBLE_EQ(p.provenance[1].second, 0.2);
  EXPECT_DOUBLE_EQ(p.provenance[2].second, 0.5);
  EXPECT_EQ(p.provenance.back().first, a);
  const auto fa = flatten(a), fb = flatten(b), fc = flatten(c);
  for (std::size_t i = 0; i < fa.size(); ++i) EXPECT_NEAR(p.energy[i], 0.5 * fa[i] + 0.3 * fb[i] + 0.2 * fc[i], 1e-14);

  // Unnormalized raw weights normalize to the same blend.
  const auto q = blend(members, std::vector<double>{3.0, 2.0, 5.0});
  for (std::size_t i = 0; i < fa.size(); ++i) EXPECT_NEAR(q.energy[i], p.energy[i], 1e-14);
}

TEST(Prototype, IdenticalConstituentsAreAFixedPoint) {
  TfTrial x = test::make_tf("t000", Direction::Left, 2, 10, 3, 5);
  std::vector<TfTrial> copies(4, x);
  for (std::size_t i = 0; i < copies.size(); ++i) copies[i].trial_id = "t" + std::to_string(i);
  std::vector<TfWindow> ws;
  for (const auto& t : copies) ws.push_back({&t, 0, 10, t.label});
  const auto p = blend(ws, std::vector<double>{0.9, 0.13, 0.42, 0.77});
  const auto fx = flatten(ws[0]);
  for (std::size_t i = 0; i < fx.size(); ++i) EXPECT_NEAR(p.energy[i], fx[i], 1e-14);
}

TEST(Prototype, BlendRejectsMixedLabelsAndBadWeights) {
  const auto trials = test::make_subject(2, 20, 1, 2);
  const std::vector<TfWindow> mixed{{&trials[0], 0, 10, trials[0].label}, {&trials[1], 0, 10, trials[1].label}};
  EXPECT_THROW(blend(mixed, std::vector<double>{0.5, 0.5}), std::invalid_argument);
  const std::vector<TfWindow> one{{&trials[0], 0, 10, trials[0].label}};
  EXPECT_THROW(blend(one, std::vector<double>{0.0}), std::invalid_argument);
}

TEST(Prototype, EpochOfHundredWindowsInBatchesOfSixteen) {
  const auto trials = test::make_subject(10, 100, 1, 2);
  const auto ws = windows_of(trials);
  ASSERT_EQ(ws.size(), 100u);
  PrototypeConfig cfg;
  cfg.k = 3;
  Rng rng(2);
  std::vector<std::size_t> sizes;
  std::vector<TfWindow> anchors;
  const auto before = prototypes_built();
  epoch_batches(ws, cfg, 16, rng, [&](std::span<const PrototypeSample> batch) {
    sizes.push_back(batch.size());
    for (const auto& p : batch) anchors.push_back(p.provenance.back().first);
  });
  EXPECT_EQ(sizes, (std::vector<std::size_t>{16, 16, 16, 16, 16, 16, 4}));
  EXPECT_EQ(prototypes_built() - before, 100u);
  // Every training window anchors exactly one prototype.
  for (const auto& w : ws) EXPECT_EQ(std::count(anchors.begin(), anchors.end(), w), 1) << w.start;
  EXPECT_NE(anchors, ws);
}

TEST(Prototype, SingleConstituentEpochIsAShuffledPass) {
  const auto trials = test::make_subject(4, 50, 1, 2);
  const auto ws = windows_of(trials);
  PrototypeConfig cfg;
  cfg.k = 1;
  Rng rng(4);
  std::vector<std::vector<double>> seen, expected;
  epoch_batches(ws, cfg, 7, rng, [&](std::span<const PrototypeSample> batch) {
    for (const auto& p : batch) seen.push_back(p.energy);
  });
  for (const auto& w : ws) expected.push_back(flatten(w));
  std::sort(seen.begin(), seen.end());
  std::sort(expected.begin(), expected.end());
  EXPECT_EQ(seen, expected);
}

TEST(Prototype, WeightAndConvexityInvariantsOverRandomDraws) {
  const auto trials = test::make_subject(12, 60, 2, 3);
  const auto ws = windows_of(trials);
  const PrototypePool pool(ws);
  Rng rng(123);
  for (std::size_t draw = 0; draw < 1000; ++draw) {
    PrototypeConfig cfg;
    cfg.k = 1 + draw % 10;
    const TfWindow& anchor = ws[rng.index(ws.size())];
    const auto p = make_prototype(anchor, pool, cfg, rng);
    double sum = 0.0;
    for (const auto& [w, weight] : p.provenance) {
      EXPECT_GT(weight, 0.0);
      EXPECT_GE(weight, cfg.weight_lo / (static_cast<double>(cfg.k) * cfg.weight_hi) - 1e-15);
      EXPECT_EQ(w.label, p.label);
      sum += weight;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    ASSERT_EQ(p.provenance.size(), cfg.k);
    std::vector<std::vector<double>> parts;
    for (const auto& [w, weight] : p.provenance) parts.push_back(flatten(w));
    for (std::size_t i = 0; i < p.energy.size(); ++i) {
      double lo = parts[0][i], hi = parts[0][i];
      for (const auto& v : parts) {
        lo = std::min(lo, v[i]);
        hi = std::max(hi, v[i]);
      }
      ASSERT_GE(p.energy[i], lo - 1e-12);
      ASSERT_LE(p.energy[i], hi + 1e-12);
    }
  }
}

TEST(Prototype, DistinctTrialsWhenEnoughAreAvailable) {
  const auto trials = test::make_subject(20, 50, 1, 2);
  const auto ws = windows_of(trials);
  const PrototypePool pool(ws);
  PrototypeConfig cfg;
  cfg.k = 10;
  Rng rng(8);
  for (std::size_t i = 0; i < 200; ++i) {
    const auto p = make_prototype(ws[i % ws.size()], pool, cfg, rng);
    std::set<const TfTrial*> sources;
    for (const auto& [w, weight] : p.provenance) sources.insert(w.source);
    EXPECT_EQ(sources.size(), 10u);
  }
}

TEST(Prototype, FallsBackWhenTooFewTrials) {
  const auto trials = test::make_subject(4, 50, 1, 2);
  const auto ws = windows_of(trials);
  const PrototypePool pool(ws);
  PrototypeConfig cfg;
  cfg.k = 5;
  Rng rng(8);
  const auto p = make_prototype(ws[0], pool, cfg, rng);
  EXPECT_EQ(p.provenance.size(), 5u);
  for (const auto& [w, weight] : p.provenance) EXPECT_EQ(w.label, ws[0].label);
}

TEST(Prototype, DeterministicUnderPinnedSeed) {
  const auto trials = test::make_subject(8, 50, 1, 2);
  const auto ws = windows_of(trials);
  PrototypeConfig cfg;
  cfg.k = 4;
  auto run = [&] {
    Rng rng(99);
    std::vector<std::vector<double>> out;
    epoch_batches(ws, cfg, 16, rng, [&](std::span<const PrototypeSample> batch) {
      for (const auto& p : batch) out.push_back(p.energy);
    });
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(Prototype, EpochNeedsBothLabels) {
  auto trials = test::make_subject(4, 50, 1, 2);
  for (auto& t : trials) t.label = Direction::Left;
  const auto ws = windows_of(trials);
  Rng rng(1);
  EXPECT_THROW(epoch_batches(ws, {}, 16, rng, [](std::span<const PrototypeSample>) {}), std::invalid_argument);
}

}  // namespace
}  // namespace aad
