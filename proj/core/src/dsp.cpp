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

#include "aad/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace aad {

namespace {

constexpr double kPi = std::numbers::pi;

// Steady-state DF2T state of each section for a unit step input.
std::vector<std::pair<double, double>> sos_step_state(const Sos& sos) {
  std::vector<std::pair<double, double>> zi;
  zi.reserve(sos.size());
  double level = 1.0;
  for (const auto& s : sos) {
    const double gain = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double y = gain * level;
    const double z2 = s.b2 * level - s.a2 * y;
    const double z1 = y - s.b0 * level;
    zi.emplace_back(z1, z2);
    level = y;
  }
  return zi;
}

void sos_run(const Sos& sos, std::vector<double>& x, std::vector<std::pair<double, double>> state) {
  for (std::size_t k = 0; k < sos.size(); ++k) {
    const auto& s = sos[k];
    double z1 = state[k].first;
    double z2 = state[k].second;
    for (double& v : x) {
      const double in = v;
      const double y = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * y + z2;
      z2 = s.b2 * in - s.a2 * y;
      v = y;
    }
  }
}

std::size_t default_padlen(const Sos& sos) { return 3 * (2 * sos.size() + 1); }

void check_stable(const Sos& sos) {
  for (const auto& s : sos)
    if (!s.stable()) throw std::runtime_error("filter unstable: pole outside the unit circle");
}

// Smallest (up, down) with up/down == ratio.
std::pair<std::size_t, std::size_t> rational_ratio(double ratio) {
  for (std::size_t down = 1; down <= 100000; ++down) {
    const double up = std::round(ratio * static_cast<double>(down));
    if (up >= 1.0 && std::abs(up / static_cast<double>(down) - ratio) <= 1e-12 * ratio)
      return {static_cast<std::size_t>(up), down};
  }
  throw std::invalid_argument("resampling ratio is not a small rational number");
}

std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  const auto last = static_cast<std::ptrdiff_t>(n) - 1;
  if (last == 0) return 0;
  while (i < 0 || i > last) {
    if (i < 0) i = -i;
    if (i > last) i = 2 * last - i;
  }
  return static_cast<std::size_t>(i);
}

}  // namespace

std::vector<double> CwtConfig::default_freqs() {
  std::vector<double> f;
  for (int hz = 2; hz <= 50; ++hz) f.push_back(hz);
  return f;
}

void PreprocessConfig::validate() const {
  if (!(target_fs_hz > 0.0)) throw std::invalid_argument("target_fs_hz must be positive");
  if (!(band_lo_hz > 0.0 && band_lo_hz < band_hi_hz && band_hi_hz < target_fs_hz / 2.0))
    throw std::invalid_argument("band edges must satisfy 0 < lo < hi < target_fs/2");
  if (filter_order < 2 || filter_order % 2 != 0)
    throw std::invalid_argument("filter_order must be an even integer >= 2");
}

void CwtConfig::validate(double fs_hz) const {
  if (freqs_hz.empty()) throw std::invalid_argument("CWT needs at least one frequency");
  for (std::size_t i = 0; i < freqs_hz.size(); ++i) {
    if (!(freqs_hz[i] > 0.0 && freqs_hz[i] < fs_hz / 2.0))
      throw std::invalid_argument("CWT frequency outside (0, fs/2)");
    if (i > 0 && !(freqs_hz[i] > freqs_hz[i - 1]))
      throw std::invalid_argument("CWT frequencies must be strictly ascending");
  }
  if (!(frames_per_s > 0.0 && frames_per_s <= fs_hz))
    throw std::invalid_argument("frames_per_s must lie in (0, fs]");
  if (!(wavelet_cycles > 0.0)) throw std::invalid_argument("wavelet_cycles must be positive");
  if (!(energy_floor > 0.0)) throw std::invalid_argument("energy_floor must be positive");
  if (!(support_sigmas > 0.0)) throw std::invalid_argument("support_sigmas must be positive");
}

bool Biquad::stable() const { return std::abs(a2) < 1.0 && std::abs(a1) < 1.0 + a2; }

Sos butterworth(FilterKind kind, int order, double cutoff_hz, double fs_hz) {
  if (order < 1) throw std::invalid_argument("Butterworth order must be >= 1");
  if (!(cutoff_hz > 0.0 && cutoff_hz < fs_hz / 2.0))
    throw std::invalid_argument("Butterworth cutoff must lie in (0, fs/2)");
  const double k = std::tan(kPi * cutoff_hz / fs_hz);
  const double k2 = k * k;
  Sos sos;
  for (int p = 0; p < order / 2; ++p) {
    const double q = 1.0 / (2.0 * std::sin(kPi * (2.0 * p + 1.0) / (2.0 * order)));
    const double norm = 1.0 / (1.0 + k / q + k2);
    Biquad s;
    if (kind == FilterKind::LowPass) {
      s.b0 = k2 * norm;
      s.b1 = 2.0 * s.b0;
      s.b2 = s.b0;
    } else {
      s.b0 = norm;
      s.b1 = -2.0 * norm;
      s.b2 = norm;
    }
    s.a1 = 2.0 * (k2 - 1.0) * norm;
    s.a2 = (1.0 - k / q + k2) * norm;
    sos.push_back(s);
  }
  if (order % 2 == 1) {
    const double norm = 1.0 / (1.0 + k);
    Biquad s;
    if (kind == FilterKind::LowPass) {
      s.b0 = k * norm;
      s.b1 = s.b0;
    } else {
      s.b0 = norm;
      s.b1 = -norm;
    }
    s.a1 = (k - 1.0) * norm;
    sos.push_back(s);
  }
  return sos;
}

Sos butterworth_bandpass(int order, double lo_hz, double hi_hz, double fs_hz) {
  if (order < 2 || order % 2 != 0) throw std::invalid_argument("band-pass order must be even and >= 2");
  if (!(lo_hz < hi_hz)) throw std::invalid_argument("band-pass needs lo < hi");
  Sos sos = butterworth(FilterKind::HighPass, order / 2, lo_hz, fs_hz);
  const Sos lp = butterworth(FilterKind::LowPass, order / 2, hi_hz, fs_hz);
  sos.insert(sos.end(), lp.begin(), lp.end());
  return sos;
}

double butterworth_magnitude(FilterKind kind, int order, double cutoff_hz, double fs_hz, double f_hz) {
  const double k = std::tan(kPi * cutoff_hz / fs_hz);
  const double w = std::tan(kPi * f_hz / fs_hz);
  const double r = kind == FilterKind::LowPass ? w / k : k / w;
  return 1.0 / std::sqrt(1.0 + std::pow(r, 2.0 * order));
}

std::vector<double> sosfilt(const Sos& sos, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  sos_run(sos, y, std::vector<std::pair<double, double>>(sos.size(), {0.0, 0.0}));
  return y;
}

std::vector<double> sosfiltfilt(const Sos& sos, std::span<const double> x, std::size_t padlen) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  padlen = std::min(padlen, n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * padlen);
  for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto zi = sos_step_state(sos);
  auto scaled = [&](double v) {
    auto z = zi;
    for (auto& [a, b] : z) {
      a *= v;
      b *= v;
    }
    return z;
  };

  sos_run(sos, ext, scaled(ext.front()));
  std::reverse(ext.begin(), ext.end());
  sos_run(sos, ext, scaled(ext.front()));
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(padlen), ext.begin() + static_cast<std::ptrdiff_t>(padlen + n)};
}

std::vector<double> resample_rational(std::span<const double> x, std::size_t up, std::size_t down) {
  if (up == 0 || down == 0) throw std::invalid_argument("resampling factors must be positive");
  const std::size_t g = std::gcd(up, down);
  up /= g;
  down /= g;
  const std::size_t n = x.size();
  if (n == 0) return {};
  if (up == 1 && down == 1) return {x.begin(), x.end()};

  // Filter defined in input-sample time units.
  const double fc = 0.5 * std::min(1.0, static_cast<double>(up) / static_cast<double>(down));
  constexpr double kZeroCrossings = 16.0;
  constexpr double kBeta = 8.0;
  const double half_width = kZeroCrossings / (2.0 * fc);
  const auto taps = static_cast<std::ptrdiff_t>(std::ceil(half_width));
  const double i0_beta = std::cyl_bessel_i(0.0, kBeta);

  auto kernel = [&](double t) {
    if (std::abs(t) > half_width) return 0.0;
    const double arg = 2.0 * fc * t;
    const double sinc = arg == 0.0 ? 1.0 : std::sin(kPi * arg) / (kPi * arg);
    const double u = t / half_width;
    return 2.0 * fc * sinc * std::cyl_bessel_i(0.0, kBeta * std::sqrt(std::max(0.0, 1.0 - u * u))) / i0_beta;
  };

  // One tap table per output phase.
  std::vector<std::vector<double>> bank(up);
  for (std::size_t p = 0; p < up; ++p) {
    const double frac = static_cast<double>(p) / static_cast<double>(up);
    auto& w = bank[p];
    w.resize(static_cast<std::size_t>(2 * taps + 1));
    double sum = 0.0;
    for (std::ptrdiff_t j = -taps; j <= taps; ++j) {
      w[static_cast<std::size_t>(j + taps)] = kernel(frac - static_cast<double>(j));
      sum += w[static_cast<std::size_t>(j + taps)];
    }
    for (double& v : w) v /= sum;
  }

  const std::size_t out_len = (n - 1) * up / down + 1;
  std::vector<double> y(out_len);
  for (std::size_t m = 0; m < out_len; ++m) {
    const std::size_t pos = m * down;
    const auto q = static_cast<std::ptrdiff_t>(pos / up);
    const auto& w = bank[pos % up];
    double acc = 0.0;
    for (std::ptrdiff_t j = -taps; j <= taps; ++j) acc += w[static_cast<std::size_t>(j + taps)] * x[reflect_index(q + j, n)];
    y[m] = acc;
  }
  return y;
}

Trial preprocess(const Trial& trial, const PreprocessConfig& cfg) {
  cfg.validate();
  validate(trial);
  if (trial.fs_hz < cfg.target_fs_hz * (1.0 - 1e-12))
    throw std::invalid_argument("trial sampling rate " + std::to_string(trial.fs_hz) + " Hz is below the target rate");

  const std::size_t nc = trial.n_channels;
  const bool resample = std::abs(trial.fs_hz - cfg.target_fs_hz) > 1e-9 * cfg.target_fs_hz;

  Sos anti_alias;
  std::size_t up = 1, down = 1;
  if (resample) {
    anti_alias = butterworth(FilterKind::LowPass, 8, 0.4 * cfg.target_fs_hz, trial.fs_hz);
    check_stable(anti_alias);
    std::tie(up, down) = rational_ratio(cfg.target_fs_hz / trial.fs_hz);
  }
  const Sos band = butterworth_bandpass(cfg.filter_order, cfg.band_lo_hz, cfg.band_hi_hz, cfg.target_fs_hz);
  check_stable(band);
  const auto band_pad = static_cast<std::size_t>(std::ceil(3.0 * cfg.target_fs_hz / cfg.band_lo_hz));

  std::vector<std::vector<double>> channels(nc);
  std::vector<double> column(trial.n_samples);
  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t t = 0; t < trial.n_samples; ++t) column[t] = trial.at(t, c);
    std::vector<double> sig = column;
    if (resample) {
      sig = sosfiltfilt(anti_alias, sig, default_padlen(anti_alias));
      if (up == 1) {
        std::vector<double> dec;
        dec.reserve(sig.size() / down + 1);
        for (std::size_t t = 0; t < sig.size(); t += down) dec.push_back(sig[t]);
        sig = std::move(dec);
      } else {
        sig = resample_rational(sig, up, down);
      }
    }
    sig = cfg.zero_phase ? sosfiltfilt(band, sig, band_pad) : sosfilt(band, sig);
    channels[c] = std::move(sig);
  }

  Trial out;
  out.subject_id = trial.subject_id;
  out.trial_id = trial.trial_id;
  out.fs_hz = cfg.target_fs_hz;
  out.n_channels = nc;
  out.n_samples = channels.front().size();
  out.label = trial.label;
  out.channel_names = trial.channel_names;
  out.hemisphere = trial.hemisphere;
  out.samples.resize(out.n_samples * nc);
  for (std::size_t t = 0; t < out.n_samples; ++t) {
    double mean = 0.0;
    for (std::size_t c = 0; c < nc; ++c) mean += channels[c][t];
    mean /= static_cast<double>(nc);
    for (std::size_t c = 0; c < nc; ++c) out.at(t, c) = channels[c][t] - mean;
  }
  return out;
}

double cwt_half_support_s(const CwtConfig& cfg) {
  const double f_lo = *std::min_element(cfg.freqs_hz.begin(), cfg.freqs_hz.end());
  return cfg.support_sigmas * cfg.wavelet_cycles / (2.0 * kPi * f_lo);
}

TfTrial cwt_log_energy(const Trial& trial, const CwtConfig& cfg) {
  validate(trial);
  cfg.validate(trial.fs_hz);
  const double fs = trial.fs_hz;
  const std::size_t n = trial.n_samples;
  const std::size_t nf = cfg.freqs_hz.size();

  // Scale (Gaussian width, seconds) and truncation radius (samples) per frequency.
  std::vector<double> scale(nf), radius(nf);
  for (std::size_t k = 0; k < nf; ++k) {
    scale[k] = cfg.wavelet_cycles / (2.0 * kPi * cfg.freqs_hz[k]);
    radius[k] = cfg.support_sigmas * scale[k] * fs;
  }
  const double max_radius = *std::max_element(radius.begin(), radius.end());
  if (static_cast<double>(n) < 2.0 * max_radius + 1.0)
    throw std::invalid_argument("trial shorter than the wavelet support at the lowest frequency");
  const auto pad = static_cast<std::size_t>(std::ceil(max_radius)) + 1;

  struct Kernel {
    std::ptrdiff_t first;
    std::vector<double> re, im;
  };
  // Kernels depend only on the sub-sample offset of the frame instant.
  std::map<long long, std::vector<Kernel>> cache;
  const double norm_const = std::pow(kPi, -0.25);
  auto kernels_for = [&](double frac) -> const std::vector<Kernel>& {
    const long long key = std::llround(frac * 1048576.0);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::vector<Kernel> ks(nf);
    for (std::size_t k = 0; k < nf; ++k) {
      const auto lo = static_cast<std::ptrdiff_t>(std::ceil(frac - radius[k]));
      const auto hi = static_cast<std::ptrdiff_t>(std::floor(frac + radius[k]));
      auto& kern = ks[k];
      kern.first = lo;
      const double amp = norm_const / std::sqrt(scale[k]) / fs;
      for (std::ptrdiff_t d = lo; d <= hi; ++d) {
        const double u = (static_cast<double>(d) - frac) / (fs * scale[k]);
        const double env = amp * std::exp(-0.5 * u * u);
        kern.re.push_back(env * std::cos(cfg.wavelet_cycles * u));
        kern.im.push_back(env * std::sin(cfg.wavelet_cycles * u));
      }
    }
    return cache.emplace(key, std::move(ks)).first->second;
  };

  TfTrial tf;
  tf.subject_id = trial.subject_id;
  tf.trial_id = trial.trial_id;
  tf.label = trial.label;
  tf.frames_per_s = cfg.frames_per_s;
  tf.freqs_hz = cfg.freqs_hz;
  tf.n_channels = trial.n_channels;
  tf.n_frames = static_cast<std::size_t>(std::floor(static_cast<double>(n) * cfg.frames_per_s / fs + 1e-9));
  tf.energy.assign(tf.n_channels * tf.n_frames * nf, 0.0);

  const double log_floor = std::log(cfg.energy_floor);
  std::vector<double> padded(n + 2 * pad);
  for (std::size_t c = 0; c < trial.n_channels; ++c) {
    for (std::size_t i = 0; i < padded.size(); ++i)
      padded[i] = trial.at(reflect_index(static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(pad), n), c);
    for (std::size_t j = 0; j < tf.n_frames; ++j) {
      const double center = static_cast<double>(j) * fs / cfg.frames_per_s;
      const double base = std::floor(center);
      const auto& ks = kernels_for(center - base);
      const auto origin = static_cast<std::ptrdiff_t>(base) + static_cast<std::ptrdiff_t>(pad);
      for (std::size_t k = 0; k < nf; ++k) {
        const auto& kern = ks[k];
        const double* x = padded.data() + (origin + kern.first);
        double re = 0.0, im = 0.0;
        for (std::size_t m = 0; m < kern.re.size(); ++m) {
          re += x[m] * kern.re[m];
          im += x[m] * kern.im[m];
        }
        const double energy = re * re + im * im;
        tf.at(c, j, k) = energy > cfg.energy_floor ? std::log(energy) : log_floor;
      }
    }
  }
  return tf;
}

std::size_t frames_for(double seconds, double frames_per_s) {
  const double v = seconds * frames_per_s;
  const double r = std::round(v);
  if (!(r >= 1.0) || std::abs(v - r) > 1e-6)
    throw std::invalid_argument("duration " + std::to_string(seconds) + " s is not a positive whole number of frames");
  return static_cast<std::size_t>(r);
}

std::vector<TfWindow> segment_windows(const TfTrial& tf, double window_s, double stride_s) {
  const std::size_t len = frames_for(window_s, tf.frames_per_s);
  const std::size_t hop = frames_for(stride_s, tf.frames_per_s);
  std::vector<TfWindow> out;
  for (std::size_t start = 0; start + len <= tf.n_frames; start += hop)
    out.push_back({&tf, start, start + len, tf.label});
  return out;
}

}  // namespace aad
