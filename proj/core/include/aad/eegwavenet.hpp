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
#include <filesystem>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "aad/core_data.hpp"

namespace aad {

/// EEGWaveNet: Conv2d(C -> 9, 3x3, valid) over (time, frequency), batch norm,
/// PReLU, mean over time, linear to two logits, softmax.
///
/// Input layout is B x C x T_w x F, row-major.
struct NetShape {
  static constexpr std::size_t kFilters = 9;
  static constexpr std::size_t kKernel = 3;
  static constexpr std::size_t kClasses = 2;

  std::size_t c_in{0};
  std::size_t t_w{0};
  std::size_t f{0};

  std::size_t t1() const { return t_w - kKernel + 1; }
  std::size_t f1() const { return f - kKernel + 1; }
  std::size_t input_size() const { return c_in * t_w * f; }
  std::size_t features() const { return kFilters * f1(); }
  void validate() const;
  friend bool operator==(const NetShape&, const NetShape&) = default;
};

struct NetConfig {
  double bn_momentum{0.1};
  double bn_eps{1e-5};
  double prelu_init{0.25};

  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

template <class T>
struct BasicModelGrads {
  std::vector<T> conv_kernel;  // 9 x C x 3 x 3
  std::vector<T> conv_bias;    // 9
  std::vector<T> bn_gamma;     // 9
  std::vector<T> bn_beta;      // 9
  std::vector<T> prelu_alpha;  // 9
  std::vector<T> linear_w;     // 2 x (9 * F1)
  std::vector<T> linear_b;     // 2

  explicit BasicModelGrads(const NetShape& shape = {});

  /// Learnable tensors in checkpoint order.
  template <class Fn>
  void for_each(Fn&& fn) {
    fn("conv_kernel", std::span<T>(conv_kernel));
    fn("conv_bias", std::span<T>(conv_bias));
    fn("bn_gamma", std::span<T>(bn_gamma));
    fn("bn_beta", std::span<T>(bn_beta));
    fn("prelu_alpha", std::span<T>(prelu_alpha));
    fn("linear_w", std::span<T>(linear_w));
    fn("linear_b", std::span<T>(linear_b));
  }
};

template <class T>
struct BasicModelParams {
  NetShape shape;
  NetConfig config;
  std::uint64_t seed{0};
  std::vector<T> conv_kernel;
  std::vector<T> conv_bias;
  std::vector<T> bn_gamma;
  std::vector<T> bn_beta;
  std::vector<T> bn_running_mean;
  std::vector<T> bn_running_var;
  std::vector<T> prelu_alpha;
  std::vector<T> linear_w;
  std::vector<T> linear_b;

  std::size_t learnable_count() const;

  template <class Fn>
  void for_each_learnable(Fn&& fn) {
    fn("conv_kernel", std::span<T>(conv_kernel));
    fn("conv_bias", std::span<T>(conv_bias));
    fn("bn_gamma", std::span<T>(bn_gamma));
    fn("bn_beta", std::span<T>(bn_beta));
    fn("prelu_alpha", std::span<T>(prelu_alpha));
    fn("linear_w", std::span<T>(linear_w));
    fn("linear_b", std::span<T>(linear_b));
  }

  template <class U>
  BasicModelParams<U> cast() const {
    auto conv = [](const std::vector<T>& v) { return std::vector<U>(v.begin(), v.end()); };
    return {shape,          config,         seed,           conv(conv_kernel), conv(conv_bias),
            conv(bn_gamma), conv(bn_beta),  conv(bn_running_mean), conv(bn_running_var),
            conv(prelu_alpha), conv(linear_w), conv(linear_b)};
  }

  friend bool operator==(const BasicModelParams&, const BasicModelParams&) = default;
};

using ModelParams = BasicModelParams<double>;
using ModelGrads = BasicModelGrads<double>;

/// Intermediates of a train-mode forward pass, consumed by backward().
/// `input` aliases the caller's batch, which must stay alive until backward.
template <class T>
struct ForwardTrace {
  std::size_t batch{0};
  std::span<const T> input;
  std::vector<T> normalized;  // BN x-hat, B x 9 x T1 x F1
  std::vector<T> bn_out;      // BN output (PReLU input)
  std::vector<double> inv_std;  // per filter
  std::vector<T> pooled;      // B x 9*F1
  std::vector<T> probs;       // B x 2
};

enum class Mode { Train, Eval };

ModelParams init_params(std::size_t c_in, std::size_t t_w, std::size_t f, std::uint64_t seed,
                        const NetConfig& config = {});

/// Eval-mode forward: running statistics, no state change. Returns B x 2 probabilities.
template <class T>
std::vector<T> forward_eval(const BasicModelParams<T>& params, std::span<const T> batch, std::size_t n);

/// Train-mode forward: batch statistics (n >= 2), updates running statistics,
/// fills `trace`. Returns B x 2 probabilities.
template <class T>
std::vector<T> forward_train(BasicModelParams<T>& params, std::span<const T> batch, std::size_t n,
                             ForwardTrace<T>& trace);

/// Mean cross-entropy over the batch and its exact gradient.
template <class T>
T backward(const BasicModelParams<T>& params, const ForwardTrace<T>& trace, std::span<const Direction> labels,
           BasicModelGrads<T>& grads);

/// Argmax of the two class probabilities; ties go to Left.
Direction argmax_direction(double p_left, double p_right);

struct Prediction {
  Direction direction{Direction::Left};
  std::array<double, 2> probs{0.5, 0.5};
};

/// window is C x T_w x F.
Prediction predict(const ModelParams& params, std::span<const double> window);

// Checkpoint: one JSON header line, then the tensors as float32 LE in
// declaration order (conv_kernel, conv_bias, bn_gamma, bn_beta,
// bn_running_mean, bn_running_var, prelu_alpha, linear_w, linear_b).
void write_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams read_checkpoint(const std::filesystem::path& path);
std::string encode_checkpoint(const ModelParams& params);

}  // namespace aad
