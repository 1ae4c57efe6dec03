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

#include "aad/eegwavenet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "aad/rng.hpp"

namespace aad {

namespace {

constexpr std::size_t kF = NetShape::kFilters;
constexpr std::size_t kK = NetShape::kKernel;
constexpr std::size_t kC = NetShape::kClasses;
// The convolution loops below are unrolled for 3 x 3 kernels.
static_assert(kK == 3 && kF % 3 == 0);

template <class T>
void check_batch(const BasicModelParams<T>& p, std::span<const T> batch, std::size_t n) {
  if (n == 0) throw std::invalid_argument("empty batch");
  if (batch.size() != n * p.shape.input_size())
    throw std::invalid_argument("batch size " + std::to_string(batch.size()) + " does not match " +
                                std::to_string(n) + " x " + std::to_string(p.shape.input_size()));
}

// Valid 3x3 convolution. Each output plane is accumulated at full input width
// (T1 x F) so every kernel tap is one contiguous multiply-add run; the two
// trailing columns of each row are scratch and dropped on compaction.
template <class T>
void conv_forward(const BasicModelParams<T>& p, const T* x, std::size_t n, std::vector<T>& z) {
  const auto& s = p.shape;
  const std::size_t t1 = s.t1(), f1 = s.f1(), f = s.f;
  const std::size_t plane_in = s.t_w * f, run = t1 * f - (kK - 1);
  z.resize(n * kF * t1 * f1);
  // Three filters per pass so each input load feeds 27 multiply-adds.
  std::vector<T> acc(3 * t1 * f);
  T* __restrict a0 = acc.data();
  T* __restrict a1 = a0 + t1 * f;
  T* __restrict a2 = a1 + t1 * f;
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t o = 0; o < kF; o += 3) {
      std::fill_n(a0, t1 * f, p.conv_bias[o]);
      std::fill_n(a1, t1 * f, p.conv_bias[o + 1]);
      std::fill_n(a2, t1 * f, p.conv_bias[o + 2]);
      for (std::size_t c = 0; c < s.c_in; ++c) {
        const T* r0 = x + (b * s.c_in + c) * plane_in;
        const T* r1 = r0 + f;
        const T* r2 = r1 + f;
        const T* u = p.conv_kernel.data() + (o * s.c_in + c) * kK * kK;
        const T* v = u + s.c_in * kK * kK;
        const T* w = v + s.c_in * kK * kK;
#pragma omp simd
        for (std::size_t m = 0; m < run; ++m) {
          const T x0 = r0[m], x1 = r0[m + 1], x2 = r0[m + 2];
          const T x3 = r1[m], x4 = r1[m + 1], x5 = r1[m + 2];
          const T x6 = r2[m], x7 = r2[m + 1], x8 = r2[m + 2];
          a0[m] += u[0] * x0 + u[1] * x1 + u[2] * x2 + u[3] * x3 + u[4] * x4 + u[5] * x5 + u[6] * x6 + u[7] * x7 +
                   u[8] * x8;
          a1[m] += v[0] * x0 + v[1] * x1 + v[2] * x2 + v[3] * x3 + v[4] * x4 + v[5] * x5 + v[6] * x6 + v[7] * x7 +
                   v[8] * x8;
          a2[m] += w[0] * x0 + w[1] * x1 + w[2] * x2 + w[3] * x3 + w[4] * x4 + w[5] * x5 + w[6] * x6 + w[7] * x7 +
                   w[8] * x8;
        }
      }
      for (std::size_t j = 0; j < 3; ++j) {
        T* dst = z.data() + (b * kF + o + j) * t1 * f1;
        const T* src = acc.data() + j * t1 * f;
        for (std::size_t t = 0; t < t1; ++t) std::copy_n(src + t * f, f1, dst + t * f1);
      }
    }
  }
}

// PReLU, temporal mean, linear, softmax. `y` holds BN outputs.
template <class T>
void head_forward(const BasicModelParams<T>& p, const std::vector<T>& y, std::size_t n, std::vector<T>& pooled,
                  std::vector<T>& probs) {
  const std::size_t t1 = p.shape.t1(), f1 = p.shape.f1(), d = p.shape.features();
  pooled.assign(n * d, T(0));
  const T inv_t = T(1) / static_cast<T>(t1);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t o = 0; o < kF; ++o) {
      const T alpha = p.prelu_alpha[o];
      const T* __restrict src = y.data() + (b * kF + o) * t1 * f1;
      T* __restrict dst = pooled.data() + b * d + o * f1;
      for (std::size_t t = 0; t < t1; ++t) {
        const T* __restrict row = src + t * f1;
#pragma omp simd
        for (std::size_t q = 0; q < f1; ++q) dst[q] += row[q] > T(0) ? row[q] : alpha * row[q];
      }
#pragma omp simd
      for (std::size_t q = 0; q < f1; ++q) dst[q] *= inv_t;
    }

  probs.resize(n * kC);
  for (std::size_t b = 0; b < n; ++b) {
    std::array<double, kC> logit{};
    for (std::size_t k = 0; k < kC; ++k) {
      const T* w = p.linear_w.data() + k * d;
      const T* x = pooled.data() + b * d;
      double acc = 0.0;
#pragma omp simd reduction(+ : acc)
      for (std::size_t j = 0; j < d; ++j) acc += static_cast<double>(w[j]) * x[j];
      logit[k] = acc + p.linear_b[k];
    }
    const double mx = std::max(logit[0], logit[1]);
    const double e0 = std::exp(logit[0] - mx), e1 = std::exp(logit[1] - mx);
    probs[b * kC + 0] = static_cast<T>(e0 / (e0 + e1));
    probs[b * kC + 1] = static_cast<T>(e1 / (e0 + e1));
  }
}

}  // namespace

void NetShape::validate() const {
  if (c_in == 0 || t_w < kKernel || f < kKernel)
    throw std::invalid_argument("network needs C >= 1, T_w >= 3 and F >= 3");
}

template <class T>
BasicModelGrads<T>::BasicModelGrads(const NetShape& s)
    : conv_kernel(kF * s.c_in * kK * kK),
      conv_bias(kF),
      bn_gamma(kF),
      bn_beta(kF),
      prelu_alpha(kF),
      linear_w(s.f >= kK ? kC * s.features() : 0),
      linear_b(kC) {}

template <class T>
std::size_t BasicModelParams<T>::learnable_count() const {
  return conv_kernel.size() + conv_bias.size() + bn_gamma.size() + bn_beta.size() + prelu_alpha.size() +
         linear_w.size() + linear_b.size();
}

ModelParams init_params(std::size_t c_in, std::size_t t_w, std::size_t f, std::uint64_t seed,
                        const NetConfig& config) {
  ModelParams p;
  p.shape = {c_in, t_w, f};
  p.shape.validate();
  p.config = config;
  p.seed = seed;
  Rng rng(seed);
  const double conv_bound = std::sqrt(1.0 / static_cast<double>(c_in * kK * kK));
  p.conv_kernel.resize(kF * c_in * kK * kK);
  for (auto& w : p.conv_kernel) w = rng.uniform(-conv_bound, conv_bound);
  p.conv_bias.assign(kF, 0.0);
  p.bn_gamma.assign(kF, 1.0);
  p.bn_beta.assign(kF, 0.0);
  p.bn_running_mean.assign(kF, 0.0);
  p.bn_running_var.assign(kF, 1.0);
  p.prelu_alpha.assign(kF, config.prelu_init);
  const double lin_bound = std::sqrt(1.0 / static_cast<double>(p.shape.features()));
  p.linear_w.resize(kC * p.shape.features());
  for (auto& w : p.linear_w) w = rng.uniform(-lin_bound, lin_bound);
  p.linear_b.assign(kC, 0.0);
  return p;
}

template <class T>
std::vector<T> forward_eval(const BasicModelParams<T>& p, std::span<const T> batch, std::size_t n) {
  check_batch(p, batch, n);
  std::vector<T> z;
  conv_forward(p, batch.data(), n, z);
  const std::size_t plane = p.shape.t1() * p.shape.f1();
  for (std::size_t o = 0; o < kF; ++o) {
    const double inv_std = 1.0 / std::sqrt(static_cast<double>(p.bn_running_var[o]) + p.config.bn_eps);
    const T scale = static_cast<T>(p.bn_gamma[o] * inv_std);
    const T shift = static_cast<T>(p.bn_beta[o] - p.bn_gamma[o] * p.bn_running_mean[o] * inv_std);
    for (std::size_t b = 0; b < n; ++b) {
      T* v = z.data() + (b * kF + o) * plane;
      for (std::size_t m = 0; m < plane; ++m) v[m] = v[m] * scale + shift;
    }
  }
  std::vector<T> pooled, probs;
  head_forward(p, z, n, pooled, probs);
  return probs;
}

template <class T>
std::vector<T> forward_train(BasicModelParams<T>& p, std::span<const T> batch, std::size_t n,
                             ForwardTrace<T>& trace) {
  check_batch(p, batch, n);
  if (n < 2) throw std::invalid_argument("train-mode forward needs a batch of at least 2");
  trace.batch = n;
  trace.input = batch;
  auto& z = trace.normalized;
  conv_forward(p, batch.data(), n, z);
  trace.bn_out.resize(z.size());
  trace.inv_std.assign(kF, 0.0);

  const std::size_t plane = p.shape.t1() * p.shape.f1();
  const double count = static_cast<double>(n * plane);
  const double m = p.config.bn_momentum;
  for (std::size_t o = 0; o < kF; ++o) {
    double sum = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      const T* v = z.data() + (b * kF + o) * plane;
#pragma omp simd reduction(+ : sum)
      for (std::size_t q = 0; q < plane; ++q) sum += v[q];
    }
    const double mean = sum / count;
    double ss = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      const T* v = z.data() + (b * kF + o) * plane;
#pragma omp simd reduction(+ : ss)
      for (std::size_t q = 0; q < plane; ++q) {
        const double d = v[q] - mean;
        ss += d * d;
      }
    }
    const double var = ss / count;
    const double inv_std = 1.0 / std::sqrt(var + p.config.bn_eps);
    trace.inv_std[o] = inv_std;
    const T gamma = p.bn_gamma[o], beta = p.bn_beta[o];
    for (std::size_t b = 0; b < n; ++b) {
      T* __restrict v = z.data() + (b * kF + o) * plane;
      T* __restrict y = trace.bn_out.data() + (b * kF + o) * plane;
#pragma omp simd
      for (std::size_t q = 0; q < plane; ++q) {
        v[q] = static_cast<T>((v[q] - mean) * inv_std);
        y[q] = gamma * v[q] + beta;
      }
    }
    p.bn_running_mean[o] = static_cast<T>((1.0 - m) * p.bn_running_mean[o] + m * mean);
    p.bn_running_var[o] = static_cast<T>((1.0 - m) * p.bn_running_var[o] + m * var * count / (count - 1.0));
  }
  head_forward(p, trace.bn_out, n, trace.pooled, trace.probs);
  return trace.probs;
}

template <class T>
T backward(const BasicModelParams<T>& p, const ForwardTrace<T>& trace, std::span<const Direction> labels,
           BasicModelGrads<T>& g) {
  const std::size_t n = trace.batch;
  if (n == 0 || labels.size() != n) throw std::invalid_argument("trace and label counts differ");
  const auto& s = p.shape;
  const std::size_t t1 = s.t1(), f1 = s.f1(), d = s.features(), plane = t1 * f1;
  if (trace.probs.size() != n * kC || trace.bn_out.size() != n * kF * plane)
    throw std::invalid_argument("trace does not match the model shape");
  g = BasicModelGrads<T>(s);

  // Softmax + cross-entropy.
  double loss = 0.0;
  std::vector<T> dlogit(n * kC);
  const T inv_n = T(1) / static_cast<T>(n);
  for (std::size_t b = 0; b < n; ++b) {
    const std::size_t y = static_cast<std::size_t>(labels[b]);
    loss -= std::log(std::max(static_cast<double>(trace.probs[b * kC + y]), std::numeric_limits<double>::min()));
    for (std::size_t k = 0; k < kC; ++k)
      dlogit[b * kC + k] = (trace.probs[b * kC + k] - (k == y ? T(1) : T(0))) * inv_n;
  }
  loss /= static_cast<double>(n);

  // Linear.
  std::vector<T> dpooled(n * d, T(0));
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t k = 0; k < kC; ++k) {
      const T dl = dlogit[b * kC + k];
      g.linear_b[k] += dl;
      const T* x = trace.pooled.data() + b * d;
      const T* w = p.linear_w.data() + k * d;
      T* gw = g.linear_w.data() + k * d;
      T* dx = dpooled.data() + b * d;
      for (std::size_t j = 0; j < d; ++j) {
        gw[j] += dl * x[j];
        dx[j] += dl * w[j];
      }
    }

  // Temporal mean and PReLU; dy overwrites a scratch copy of BN outputs.
  std::vector<T> dy(n * kF * plane);
  const T inv_t = T(1) / static_cast<T>(t1);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t o = 0; o < kF; ++o) {
      const T alpha = p.prelu_alpha[o];
      const T* __restrict y = trace.bn_out.data() + (b * kF + o) * plane;
      T* __restrict out = dy.data() + (b * kF + o) * plane;
      const T* __restrict dp = dpooled.data() + b * d + o * f1;
      double dalpha = 0.0;
      for (std::size_t t = 0; t < t1; ++t) {
        const T* __restrict yr = y + t * f1;
        T* __restrict outr = out + t * f1;
        T row_dalpha = 0;
#pragma omp simd reduction(+ : row_dalpha)
        for (std::size_t q = 0; q < f1; ++q) {
          const T da = dp[q] * inv_t;
          const bool pos = yr[q] > T(0);
          outr[q] = pos ? da : alpha * da;
          row_dalpha += pos ? T(0) : da * yr[q];
        }
        dalpha += static_cast<double>(row_dalpha);
      }
      g.prelu_alpha[o] += static_cast<T>(dalpha);
    }

  // Batch norm with batch statistics: dz = gamma*inv_std/N * (N dy - sum dy - xhat sum(dy xhat)).
  const double count = static_cast<double>(n * plane);
  for (std::size_t o = 0; o < kF; ++o) {
    double sum_dy = 0.0, sum_dy_x = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      const T* dv = dy.data() + (b * kF + o) * plane;
      const T* xh = trace.normalized.data() + (b * kF + o) * plane;
#pragma omp simd reduction(+ : sum_dy, sum_dy_x)
      for (std::size_t q = 0; q < plane; ++q) {
        sum_dy += dv[q];
        sum_dy_x += static_cast<double>(dv[q]) * xh[q];
      }
    }
    g.bn_gamma[o] = static_cast<T>(sum_dy_x);
    g.bn_beta[o] = static_cast<T>(sum_dy);
    const double k = p.bn_gamma[o] * trace.inv_std[o] / count;
    const T mean_dy = static_cast<T>(sum_dy / count), mean_dy_x = static_cast<T>(sum_dy_x / count);
    const T scale = static_cast<T>(k * count);
    double dbias = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      T* __restrict dv = dy.data() + (b * kF + o) * plane;
      const T* __restrict xh = trace.normalized.data() + (b * kF + o) * plane;
#pragma omp simd reduction(+ : dbias)
      for (std::size_t q = 0; q < plane; ++q) {
        dv[q] = scale * (dv[q] - mean_dy - xh[q] * mean_dy_x);
        dbias += dv[q];
      }
    }
    g.conv_bias[o] = static_cast<T>(dbias);
  }

  // Convolution weights: correlate each full-width dz plane with the input.
  const std::size_t f = s.f, plane_in = s.t_w * f, run = t1 * f - (kK - 1);
  std::vector<T> dz_full(t1 * f, T(0));
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t o = 0; o < kF; ++o) {
      const T* dz = dy.data() + (b * kF + o) * plane;
      for (std::size_t t = 0; t < t1; ++t) std::copy_n(dz + t * f1, f1, dz_full.data() + t * f);
      const T* __restrict grad = dz_full.data();
      for (std::size_t c = 0; c < s.c_in; ++c) {
        const T* r0 = trace.input.data() + (b * s.c_in + c) * plane_in;
        const T* r1 = r0 + f;
        const T* r2 = r1 + f;
        T a0 = 0, a1 = 0, a2 = 0, a3 = 0, a4 = 0, a5 = 0, a6 = 0, a7 = 0, a8 = 0;
#pragma omp simd reduction(+ : a0, a1, a2, a3, a4, a5, a6, a7, a8)
        for (std::size_t m = 0; m < run; ++m) {
          const T gm = grad[m];
          a0 += gm * r0[m];
          a1 += gm * r0[m + 1];
          a2 += gm * r0[m + 2];
          a3 += gm * r1[m];
          a4 += gm * r1[m + 1];
          a5 += gm * r1[m + 2];
          a6 += gm * r2[m];
          a7 += gm * r2[m + 1];
          a8 += gm * r2[m + 2];
        }
        const T taps[] = {a0, a1, a2, a3, a4, a5, a6, a7, a8};
        T* gw = g.conv_kernel.data() + (o * s.c_in + c) * kK * kK;
        for (std::size_t k = 0; k < kK * kK; ++k) gw[k] += taps[k];
      }
    }
  return static_cast<T>(loss);
}

Direction argmax_direction(double p_left, double p_right) {
  return p_right > p_left ? Direction::Right : Direction::Left;
}

Prediction predict(const ModelParams& params, std::span<const double> window) {
  const auto probs = forward_eval(params, window, 1);
  Prediction out;
  out.probs = {probs[0], probs[1]};
  out.direction = argmax_direction(probs[0], probs[1]);
  return out;
}

template struct BasicModelGrads<float>;
template struct BasicModelGrads<double>;
template struct BasicModelParams<float>;
template struct BasicModelParams<double>;
template std::vector<float> forward_eval(const BasicModelParams<float>&, std::span<const float>, std::size_t);
template std::vector<double> forward_eval(const BasicModelParams<double>&, std::span<const double>, std::size_t);
template std::vector<float> forward_train(BasicModelParams<float>&, std::span<const float>, std::size_t,
                                          ForwardTrace<float>&);
template std::vector<double> forward_train(BasicModelParams<double>&, std::span<const double>, std::size_t,
                                           ForwardTrace<double>&);
template float backward(const BasicModelParams<float>&, const ForwardTrace<float>&, std::span<const Direction>,
                        BasicModelGrads<float>&);
template double backward(const BasicModelParams<double>&, const ForwardTrace<double>&, std::span<const Direction>,
                         BasicModelGrads<double>&);

}  // namespace aad
