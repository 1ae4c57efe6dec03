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

#include "aad/trainer.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "aad/rng.hpp"

namespace aad {

namespace {

NetShape shape_of(std::span<const TfWindow> windows) {
  const auto& w = windows.front();
  NetShape s{w.n_channels(), w.length(), w.n_freqs()};
  for (const auto& x : windows)
    if (x.n_channels() != s.c_in || x.length() != s.t_w || x.n_freqs() != s.f)
      throw std::invalid_argument("training windows differ in shape");
  return s;
}

template <class T>
TrainedModel train_impl(std::span<const TfWindow> windows, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  const NetShape shape = shape_of(windows);
  const ModelParams init = init_params(shape.c_in, shape.t_w, shape.f, derive_seed(cfg.seed, "init"), cfg.net);
  BasicModelParams<T> params = init.template cast<T>();
  Optimizer<T> opt(params, cfg);
  Rng rng(derive_seed(cfg.seed, "prototype"));

  TrainedModel out;
  out.config = cfg;
  ForwardTrace<T> trace;
  BasicModelGrads<T> grads(shape);

  std::vector<T> pending;
  std::vector<Direction> pending_labels;
  double epoch_loss = 0.0;
  std::size_t epoch_count = 0;
  std::size_t epoch = 0, batch_index = 0;

  auto step = [&] {
    const std::size_t n = pending_labels.size();
    forward_train(params, std::span<const T>(pending), n, trace);
    const T loss = backward(params, trace, std::span<const Direction>(pending_labels), grads);
    if (!std::isfinite(static_cast<double>(loss))) {
      std::ostringstream msg;
      msg << "non-finite training loss at epoch " << epoch << ", batch " << batch_index;
      throw std::runtime_error(msg.str());
    }
    opt.step(params, grads);
    epoch_loss += static_cast<double>(loss) * static_cast<double>(n);
    epoch_count += n;
    ++batch_index;
    pending.clear();
    pending_labels.clear();
  };

  for (epoch = 0; epoch < cfg.epochs; ++epoch) {
    epoch_loss = 0.0;
    epoch_count = 0;
    batch_index = 0;
    epoch_batches(windows, cfg.prototype, cfg.batch_size, rng, [&](std::span<const PrototypeSample> batch) {
      // A one-example tail cannot form batch statistics; it joins the previous batch.
      if (!pending_labels.empty() && batch.size() >= 2) step();
      for (const auto& s : batch) {
        pending.insert(pending.end(), s.energy.begin(), s.energy.end());
        pending_labels.push_back(s.label);
      }
    });
    if (pending_labels.size() == 1)
      throw std::invalid_argument("training set of a single window cannot form a batch");
    step();
    out.history.push_back(epoch_loss / static_cast<double>(epoch_count));
    if (on_epoch) on_epoch(epoch, out.history.back());
  }
  out.params = params.template cast<double>();
  if (cfg.epochs == 0) out.params = init;
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 2) throw std::invalid_argument("batch_size must be at least 2");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  prototype.validate();
}

template <class T>
Optimizer<T>::Optimizer(const BasicModelParams<T>& params, const TrainConfig& cfg) : cfg_(cfg) {
  BasicModelGrads<T> layout(params.shape);
  layout.for_each([&](const char*, std::span<T> v) {
    m_.emplace_back(v.size(), 0.0);
    v_.emplace_back(v.size(), 0.0);
  });
}

template <class T>
void Optimizer<T>::step(BasicModelParams<T>& params, BasicModelGrads<T>& grads) {
  ++t_;
  std::vector<std::span<T>> g;
  grads.for_each([&](const char*, std::span<T> v) { g.push_back(v); });
  std::size_t idx = 0;
  const double lr = cfg_.learning_rate;
  if (cfg_.optimizer == OptimizerKind::Sgd) {
    params.for_each_learnable([&](const char*, std::span<T> w) {
      const auto& gv = g[idx++];
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<T>(w[i] - lr * gv[i]);
    });
    return;
  }
  const double b1 = cfg_.adam_beta1, b2 = cfg_.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  params.for_each_learnable([&](const char*, std::span<T> w) {
    const auto& gv = g[idx];
    auto& m = m_[idx];
    auto& v = v_[idx];
    ++idx;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = gv[i];
      m[i] = b1 * m[i] + (1.0 - b1) * gi;
      v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
      const double update = lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.adam_eps);
      w[i] = static_cast<T>(w[i] - update);
    }
  });
}

template class Optimizer<float>;
template class Optimizer<double>;

TrainedModel train(std::span<const TfWindow> train_windows, const TrainConfig& cfg) {
  return train(train_windows, cfg, nullptr);
}

TrainedModel train(std::span<const TfWindow> train_windows, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_windows.empty()) throw std::invalid_argument("empty training set");
  bool left = false, right = false;
  for (const auto& w : train_windows) (w.label == Direction::Left ? left : right) = true;
  if (!left || !right) throw std::invalid_argument("training set contains a single class");
  return cfg.precision == Precision::Float32 ? train_impl<float>(train_windows, cfg, on_epoch)
                                             : train_impl<double>(train_windows, cfg, on_epoch);
}

template <class T>
void pack_windows(std::span<const TfWindow> windows, std::vector<T>& out) {
  out.clear();
  if (windows.empty()) return;
  out.reserve(windows.size() * windows.front().size());
  for (const auto& w : windows)
    for (std::size_t c = 0; c < w.n_channels(); ++c) {
      const auto block = w.channel(c);
      out.insert(out.end(), block.begin(), block.end());
    }
}

template void pack_windows(std::span<const TfWindow>, std::vector<float>&);
template void pack_windows(std::span<const TfWindow>, std::vector<double>&);

std::vector<Direction> predict_windows(const ModelParams& params, std::span<const TfWindow> windows) {
  constexpr std::size_t kChunk = 256;
  std::vector<Direction> out;
  out.reserve(windows.size());
  std::vector<double> buf;
  for (std::size_t i = 0; i < windows.size(); i += kChunk) {
    const auto chunk = windows.subspan(i, std::min(kChunk, windows.size() - i));
    pack_windows(chunk, buf);
    const auto probs = forward_eval(params, std::span<const double>(buf), chunk.size());
    for (std::size_t b = 0; b < chunk.size(); ++b) out.push_back(argmax_direction(probs[2 * b], probs[2 * b + 1]));
  }
  return out;
}

double accuracy(std::span<const Direction> predicted, std::span<const TfWindow> windows) {
  if (windows.empty()) throw std::invalid_argument("empty test set");
  if (predicted.size() != windows.size()) throw std::invalid_argument("prediction count differs from window count");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < windows.size(); ++i) hits += predicted[i] == windows[i].label ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(windows.size());
}

double evaluate_windows(const TrainedModel& model, std::span<const TfWindow> test_windows) {
  if (test_windows.empty()) throw std::invalid_argument("empty test set");
  const auto predicted = predict_windows(model.params, test_windows);
  return accuracy(predicted, test_windows);
}

}  // namespace aad
