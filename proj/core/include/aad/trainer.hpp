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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "aad/core_data.hpp"
#include "aad/eegwavenet.hpp"
#include "aad/prototype.hpp"

namespace aad {

enum class OptimizerKind { Adam, Sgd };
enum class Precision { Float32, Float64 };

struct TrainConfig {
  std::size_t epochs{50};
  std::size_t batch_size{16};
  double learning_rate{0.001};
  OptimizerKind optimizer{OptimizerKind::Adam};
  double adam_beta1{0.9};
  double adam_beta2{0.999};
  double adam_eps{1e-8};
  PrototypeConfig prototype{};
  NetConfig net{};
  Precision precision{Precision::Float64};
  std::uint64_t seed{0};

  void validate() const;
};

struct TrainedModel {
  ModelParams params;
  std::vector<double> history;  // mean training loss per epoch
  TrainConfig config;
};

/// Adam (or plain SGD) over the learnable tensors of a model.
template <class T>
class Optimizer {
 public:
  Optimizer(const BasicModelParams<T>& params, const TrainConfig& cfg);
  void step(BasicModelParams<T>& params, BasicModelGrads<T>& grads);
  std::size_t steps() const { return t_; }

 private:
  TrainConfig cfg_;
  std::size_t t_{0};
  std::vector<std::vector<double>> m_, v_;
};

/// Fixed-budget training with prototype batches. Deterministic per cfg.seed.
TrainedModel train(std::span<const TfWindow> train_windows, const TrainConfig& cfg);

/// Called after every epoch with (epoch index, mean loss). Optional.
using EpochCallback = std::function<void(std::size_t, double)>;
TrainedModel train(std::span<const TfWindow> train_windows, const TrainConfig& cfg, const EpochCallback& on_epoch);

/// Eval-mode predictions on raw windows.
std::vector<Direction> predict_windows(const ModelParams& params, std::span<const TfWindow> windows);

/// Fraction of raw windows whose prediction matches the label.
double evaluate_windows(const TrainedModel& model, std::span<const TfWindow> test_windows);
double accuracy(std::span<const Direction> predicted, std::span<const TfWindow> windows);

/// Copies windows into a contiguous B x C x T_w x F buffer.
template <class T>
void pack_windows(std::span<const TfWindow> windows, std::vector<T>& out);

}  // namespace aad
