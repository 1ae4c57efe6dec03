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

#include "aad/dsp.hpp"
#include "aad/prototype.hpp"
#include "aad/rng.hpp"

namespace {

std::vector<aad::TfTrial> fake_trials(std::size_t n_trials) {
  std::vector<aad::TfTrial> out(n_trials);
  aad::Rng rng(11);
  for (std::size_t i = 0; i < n_trials; ++i) {
    auto& t = out[i];
    t.subject_id = "S01";
    t.trial_id = "t" + std::to_string(i);
    t.label = i % 2 ? aad::Direction::Right : aad::Direction::Left;
    t.frames_per_s = 10.0;
    t.freqs_hz = aad::CwtConfig::default_freqs();
    t.n_channels = 16;
    t.n_frames = 600;
    t.energy.resize(t.n_channels * t.n_frames * t.n_freqs());
    for (auto& v : t.energy) v = rng.normal();
  }
  return out;
}

// One epoch of prototype generation over a 15-trial training set.
void BM_EpochPrototypes(benchmark::State& state) {
  const auto trials = fake_trials(15);
  std::vector<aad::TfWindow> windows;
  for (const auto& t : trials) {
    auto w = aad::segment_windows(t, 1.0, 1.0);
    windows.insert(windows.end(), w.begin(), w.end());
  }
  aad::PrototypeConfig cfg;
  cfg.k = static_cast<std::size_t>(state.range(0));
  aad::Rng rng(5);
  for (auto _ : state)
    aad::epoch_batches(windows, cfg, 16, rng, [](std::span<const aad::PrototypeSample> b) {
      benchmark::DoNotOptimize(b.data());
    });
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(windows.size()));
}
BENCHMARK(BM_EpochPrototypes)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace
