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

#include <benchmark/benchmark.h>

#include <vector>

#include "aad/eegwavenet.hpp"
#include "aad/rng.hpp"

namespace {

// Benchmark shape: 16 channels, 1 s window at 10 frames/s, 49 frequencies.
constexpr std::size_t kC = 16, kT = 10, kFreq = 49, kBatch = 16;

template <class T>
std::vector<T> random_batch(std::size_t n, std::uint64_t seed) {
  aad::Rng rng(seed);
  std::vector<T> x(n * kC * kT * kFreq);
  for (auto& v : x) v = static_cast<T>(rng.normal());
  return x;
}

std::vector<aad::Direction> alternating_labels(std::size_t n) {
  std::vector<aad::Direction> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = i % 2 ? aad::Direction::Right : aad::Direction::Left;
  return y;
}

template <class T>
void BM_TrainStep(benchmark::State& state) {
  auto params = aad::init_params(kC, kT, kFreq, 1).cast<T>();
  const auto x = random_batch<T>(kBatch, 2);
  const auto y = alternating_labels(kBatch);
  aad::ForwardTrace<T> trace;
  aad::BasicModelGrads<T> grads(params.shape);
  for (auto _ : state) {
    aad::forward_train(params, std::span<const T>(x), kBatch, trace);
    benchmark::DoNotOptimize(aad::backward(params, trace, std::span<const aad::Direction>(y), grads));
  }
  state.SetItemsProcessed(state.iterations() * kBatch);
}
BENCHMARK(BM_TrainStep<float>);
BENCHMARK(BM_TrainStep<double>);

template <class T>
void BM_ForwardEval(benchmark::State& state) {
  const auto params = aad::init_params(kC, kT, kFreq, 1).cast<T>();
  const std::size_t n = 256;
  const auto x = random_batch<T>(n, 3);
  for (auto _ : state) benchmark::DoNotOptimize(aad::forward_eval(params, std::span<const T>(x), n));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_ForwardEval<float>);
BENCHMARK(BM_ForwardEval<double>);

}  // namespace
