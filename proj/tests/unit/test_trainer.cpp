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

#include <cmath>
#include <vector>

#include "aad/dsp.hpp"
#include "aad/trainer.hpp"
#include "test_support.hpp"

namespace aad {
namespace {

// Two Gaussian blobs that differ only in frequency bin 1: every entry is
// N(0, 1) noise, and bin 1 carries +2 for Left and -2 for Right.
struct Blobs {
  std::vector<TfTrial> trials;
  std::vector<TfWindow> windows;
};

Blobs make_blobs(std::uint64_t seed) {
  Blobs b;
  for (std::size_t i = 0; i < 8; ++i) {
    const Direction label = i % 2 == 0 ? Direction::Left : Direction::Right;
    TfTrial tf = test::make_tf("t" + std::to_string(i), label, 2, 40, 4, seed + i);
    const double shift = label == Direction::Left ? 2.0 : -2.0;
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t t = 0; t < 40; ++t) tf.at(c, t, 1) += shift;
    b.trials.push_back(std::move(tf));
  }
  for (const auto& t : b.trials) {
    const auto ws = segment_windows(t, 0.4, 0.4);
    b.windows.insert(b.windows.end(), ws.begin(), ws.end());
  }
  return b;
}

// Closed-form linear classifier on the shifted bin: sign of its window mean.
double linear_oracle_accuracy(const std::vector<TfWindow>& ws) {
  std::size_t hits = 0;
  for (const auto& w : ws) {
    double m = 0.0;
    for (std::size_t c = 0; c < w.n_channels(); ++c)
      for (std::size_t t = 0; t < w.length(); ++t) m += w.at(c, t, 1);
    hits += (m > 0.0 ? Direction::Left : Direction::Right) == w.label;
  }
  return static_cast<double>(hits) / static_cast<double>(ws.size());
}

TrainConfig toy_config() {
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.learning_rate = 0.01;
  cfg.prototype.k = 1;
  cfg.seed = 5;
  return cfg;
}

TEST(Trainer, SeparableBlobsAreLearned) {
  const Blobs b = make_blobs(100);
  ASSERT_EQ(b.windows.size(), 80u);
  ASSERT_EQ(linear_oracle_accuracy(b.windows), 1.0);
  const TrainConfig cfg = toy_config();
  const TrainedModel m = train(b.windows, cfg);
  ASSERT_EQ(m.history.size(), cfg.epochs);
  for (double l : m.history) EXPECT_TRUE(std::isfinite(l));
  EXPECT_GE(evaluate_windows(m, b.windows), 0.99);
}

TEST(Trainer, FullBatchLossIsNonIncreasingAfterWarmup) {
  const Blobs b = make_blobs(300);
  TrainConfig cfg = toy_config();
  cfg.batch_size = b.windows.size();
  cfg.learning_rate = 0.005;
  cfg.epochs = 60;
  const TrainedModel m = train(b.windows, cfg);
  for (std::size_t e = 6; e < m.history.size(); ++e) EXPECT_LE(m.history[e], m.history[e - 1] + 1e-3) << e;
  EXPECT_LT(m.history.back(), 0.5 * m.history.front());
}

TEST(Trainer, SeparableBlobsInSinglePrecision) {
  const Blobs b = make_blobs(200);
  TrainConfig cfg = toy_config();
  cfg.precision = Precision::Float32;
  EXPECT_GE(evaluate_windows(train(b.windows, cfg), b.windows), 0.99);
}

TEST(Trainer, ZeroEpochsReturnsInitialParameters) {
  const Blobs b = make_blobs(1);
  TrainConfig cfg = toy_config();
  cfg.epochs = 0;
  const TrainedModel m = train(b.windows, cfg);
  EXPECT_TRUE(m.history.empty());
  EXPECT_EQ(m.params, init_params(2, 4, 4, derive_seed(cfg.seed, "init")));
}

TEST(Trainer, IdenticalSeedsGiveIdenticalCheckpoints) {
  const Blobs b = make_blobs(3);
  TrainConfig cfg = toy_config();
  cfg.epochs = 5;
  cfg.prototype.k = 3;
  const TrainedModel a = train(b.windows, cfg);
  const TrainedModel c = train(b.windows, cfg);
  EXPECT_EQ(encode_checkpoint(a.params), encode_checkpoint(c.params));
  EXPECT_EQ(a.history, c.history);
  cfg.seed = 6;
  EXPECT_NE(encode_checkpoint(train(b.windows, cfg).params), encode_checkpoint(a.params));
}

TEST(Trainer, EpochCallbackSeesEveryEpoch) {
  const Blobs b = make_blobs(4);
  TrainConfig cfg = toy_config();
  cfg.epochs = 3;
  std::vector<std::size_t> seen;
  const auto m = train(b.windows, cfg, [&](std::size_t e, double) { seen.push_back(e); });
  EXPECT_EQ(seen, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Trainer, EvaluationNeverBuildsPrototypes) {
  const Blobs b = make_blobs(7);
  TrainConfig cfg = toy_config();
  cfg.epochs = 2;
  cfg.prototype.k = 4;
  const auto before_train = prototypes_built();
  const TrainedModel m = train(b.windows, cfg);
  EXPECT_EQ(prototypes_built() - before_train, 2 * b.windows.size());
  const auto before_eval = prototypes_built();
  evaluate_windows(m, b.windows);
  predict_windows(m.params, b.windows);
  EXPECT_EQ(prototypes_built(), before_eval);
}

TEST(Trainer, ConstantModelScoresHalfOnBalancedSet) {
  const Blobs b = make_blobs(8);
  TrainedModel m;
  m.params = init_params(2, 4, 4, 1);
  std::fill(m.params.linear_w.begin(), m.params.linear_w.end(), 0.0);
  m.params.linear_b = {1.0, 0.0};
  EXPECT_DOUBLE_EQ(evaluate_windows(m, b.windows), 0.5);
}

TEST(Trainer, AccuracyArithmetic) {
  const Blobs b = make_blobs(9);
  std::vector<Direction> truth, flipped;
  for (const auto& w : b.windows) {
    truth.push_back(w.label);
    flipped.push_back(w.label == Direction::Left ? Direction::Right : Direction::Left);
  }
  EXPECT_EQ(accuracy(truth, b.windows), 1.0);
  EXPECT_EQ(accuracy(flipped, b.windows), 0.0);
  flipped[0] = truth[0];
  EXPECT_DOUBLE_EQ(accuracy(flipped, b.windows), 1.0 / 80.0);
  EXPECT_THROW(accuracy(std::vector<Direction>{}, b.windows), std::invalid_argument);
}

TEST(Trainer, ZeroGradientAdamStepLeavesParameters) {
  const ModelParams p0 = init_params(2, 4, 4, 3);
  ModelParams p = p0;
  TrainConfig cfg;
  Optimizer<double> opt(p, cfg);
  ModelGrads zero(p.shape);
  opt.step(p, zero);
  opt.step(p, zero);
  EXPECT_EQ(opt.steps(), 2u);
  std::vector<std::vector<double>> before;
  ModelParams q = p0;
  q.for_each_learnable([&](const char*, std::span<double> v) { before.emplace_back(v.begin(), v.end()); });
  std::size_t t = 0;
  p.for_each_learnable([&](const char*, std::span<double> v) {
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(v[i], before[t][i], 1e-12);
    ++t;
  });
}

TEST(Trainer, AdamFirstStepMovesByLearningRate) {
  ModelParams p = init_params(2, 4, 4, 3);
  const ModelParams p0 = p;
  TrainConfig cfg;
  Optimizer<double> opt(p, cfg);
  ModelGrads g(p.shape);
  g.linear_b = {0.5, -2.0};
  opt.step(p, g);
  // Bias correction makes the first update lr * sign(g).
  EXPECT_NEAR(p.linear_b[0], p0.linear_b[0] - cfg.learning_rate, 1e-9);
  EXPECT_NEAR(p.linear_b[1], p0.linear_b[1] + cfg.learning_rate, 1e-9);
  EXPECT_EQ(p.conv_kernel, p0.conv_kernel);
}

TEST(Trainer, RejectsDegenerateInput) {
  const Blobs b = make_blobs(10);
  std::vector<TfWindow> left;
  for (const auto& w : b.windows)
    if (w.label == Direction::Left) left.push_back(w);
  EXPECT_THROW(train(left, toy_config()), std::invalid_argument);
  EXPECT_THROW(train(std::vector<TfWindow>{}, toy_config()), std::invalid_argument);
  TrainConfig cfg = toy_config();
  cfg.learning_rate = 0.0;
  EXPECT_THROW(train(b.windows, cfg), std::invalid_argument);
}

}  // namespace
}  // namespace aad
