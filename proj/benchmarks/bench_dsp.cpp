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

#include "aad/dsp.hpp"
#include "aad/rng.hpp"

namespace {

aad::Trial noise_trial(std::size_t channels, double seconds, double fs) {
  aad::Trial t;
  t.subject_id = "S01";
  t.trial_id = "t000";
  t.fs_hz = fs;
  t.n_channels = channels;
  t.n_samples = static_cast<std::size_t>(seconds * fs);
  aad::Rng rng(7);
  t.samples.resize(t.n_samples * channels);
  for (auto& v : t.samples) v = rng.normal();
  for (std::size_t c = 0; c < channels; ++c) {
    t.channel_names.push_back("C" + std::to_string(c));
    t.hemisphere.push_back(c < channels / 2 ? aad::Hemisphere::Left : aad::Hemisphere::Right);
  }
  return t;
}

void BM_SosFiltFilt(benchmark::State& state) {
  const auto sos = aad::butterworth_bandpass(4, 1.0, 50.0, 128.0);
  const auto t = noise_trial(1, 60.0, 128.0);
  for (auto _ : state) benchmark::DoNotOptimize(aad::sosfiltfilt(sos, t.samples, 384));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(t.samples.size()));
}
BENCHMARK(BM_SosFiltFilt);

void BM_Preprocess(benchmark::State& state) {
  const auto t = noise_trial(16, 60.0, static_cast<double>(state.range(0)));
  const aad::PreprocessConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(aad::preprocess(t, cfg));
}
BENCHMARK(BM_Preprocess)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_CwtTrial(benchmark::State& state) {
  const auto t = noise_trial(16, 60.0, 128.0);
  const aad::CwtConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(aad::cwt_log_energy(t, cfg));
}
BENCHMARK(BM_CwtTrial)->Unit(benchmark::kMillisecond);

}  // namespace
