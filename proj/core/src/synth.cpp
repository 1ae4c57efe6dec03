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

#include "aad/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "aad/dsp.hpp"
#include "aad/rng.hpp"

namespace aad {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Paul Kellet's refined 1/f filter applied to white Gaussian noise.
std::vector<double> pink_noise(std::size_t n, Rng& rng) {
  std::vector<double> out(n);
  double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
  // Burn-in so the slow poles start near their stationary state.
  const std::size_t warmup = 4096;
  for (std::size_t i = 0; i < n + warmup; ++i) {
    const double white = rng.normal();
    b0 = 0.99886 * b0 + white * 0.0555179;
    b1 = 0.99332 * b1 + white * 0.0750759;
    b2 = 0.96900 * b2 + white * 0.1538520;
    b3 = 0.86650 * b3 + white * 0.3104856;
    b4 = 0.55000 * b4 + white * 0.5329522;
    b5 = -0.7616 * b5 - white * 0.0168980;
    const double pink = b0 + b1 + b2 + b3 + b4 + b5 + b6 + white * 0.5362;
    b6 = white * 0.115926;
    if (i >= warmup) out[i - warmup] = pink;
  }
  return out;
}

void normalize_rms(std::vector<double>& x, double target) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double& v : x) {
    v -= mean;
    ss += v * v;
  }
  const double rms = std::sqrt(ss / static_cast<double>(x.size()));
  if (rms > 0.0)
    for (double& v : x) v *= target / rms;
}

// Largest singular value by power iteration on G^T G.
double spectral_norm(const std::vector<double>& g, std::size_t n) {
  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n))), w(n), u(n);
  double sigma = 0.0;
  for (int it = 0; it < 500; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * v[j];
      u[i] = acc;
    }
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += g[i * n + j] * u[i];
      w[j] = acc;
    }
    double norm = 0.0;
    for (double x : w) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (std::size_t j = 0; j < n; ++j) v[j] = w[j] / norm;
    const double next = std::sqrt(norm);
    if (std::abs(next - sigma) <= 1e-14 * next) return next;
    sigma = next;
  }
  return sigma;
}

Trial make_trial(const SynthConfig& cfg, std::size_t subject, std::size_t index, SynthTrialReport& rep) {
  const std::size_t nc = cfg.n_channels;
  const auto ns = static_cast<std::size_t>(std::llround(cfg.trial_s * cfg.fs_hz));
  Rng rng(derive_seed(cfg.seed, "trial/" + std::to_string(subject) + "/" + std::to_string(index)));

  Trial t;
  t.subject_id = subject_name(subject);
  char id[32];
  std::snprintf(id, sizeof id, "t%03zu", index);
  t.trial_id = id;
  t.fs_hz = cfg.fs_hz;
  t.n_channels = nc;
  t.n_samples = ns;
  t.label = index % 2 == 0 ? Direction::Left : Direction::Right;
  for (std::size_t c = 0; c < nc; ++c) {
    const bool left = c < nc / 2;
    t.channel_names.push_back((left ? "L" : "R") + std::to_string(left ? c + 1 : c - nc / 2 + 1));
    t.hemisphere.push_back(left ? Hemisphere::Left : Hemisphere::Right);
  }

  // Source signals, one row per channel.
  std::vector<std::vector<double>> src(nc);
  for (auto& row : src) {
    row = pink_noise(ns, rng);
    normalize_rms(row, cfg.noise_scale);
  }

  // Alpha oscillators: band-limited noise with a random envelope, gain by attended side.
  const Sos alpha_band = butterworth_bandpass(4, cfg.alpha_lo_hz, cfg.alpha_hi_hz, cfg.fs_hz);
  std::vector<double> white(ns);
  for (std::size_t c = 0; c < nc; ++c) {
    for (double& v : white) v = rng.normal();
    auto alpha = sosfilt(alpha_band, white);
    normalize_rms(alpha, cfg.alpha_amplitude * cfg.noise_scale);
    const bool ipsilateral = (t.hemisphere[c] == Hemisphere::Left) == (t.label == Direction::Left);
    const double gain = ipsilateral ? 1.0 + cfg.attention_strength : 1.0 - cfg.attention_strength;
    for (std::size_t i = 0; i < ns; ++i) src[c][i] += gain * alpha[i];
  }

  // Fingerprint oscillators at non-alpha frequencies with a random topography.
  rep.fingerprint_freqs_hz.clear();
  const double fp_rms = cfg.fingerprint_strength * cfg.fingerprint_amplitude * cfg.noise_scale;
  for (std::size_t k = 0; k < cfg.fingerprint_oscillators; ++k) {
    double f;
    do {
      f = rng.uniform(2.0, 40.0);
    } while (f > cfg.alpha_lo_hz - 1.0 && f < cfg.alpha_hi_hz + 1.0);
    rep.fingerprint_freqs_hz.push_back(f);
    const double phase = rng.uniform(0.0, kTwoPi);
    std::vector<double> topo(nc);
    double ss = 0.0;
    for (double& g : topo) {
      g = rng.normal();
      ss += g * g;
    }
    const double scale = fp_rms * std::sqrt(2.0) / std::sqrt(ss / static_cast<double>(nc));
    for (std::size_t c = 0; c < nc; ++c)
      for (std::size_t i = 0; i < ns; ++i)
        src[c][i] += scale * topo[c] * std::sin(kTwoPi * f * static_cast<double>(i) / cfg.fs_hz + phase);
  }

  // Mixing: x = (I + rho_f * G / ||G||_2) s.
  std::vector<double> g(nc * nc);
  for (double& v : g) v = rng.normal();
  const double sn = spectral_norm(g, nc);
  for (double& v : g) v *= cfg.fingerprint_strength / sn;
  rep.mixing_perturbation_norm = cfg.fingerprint_strength;

  t.samples.assign(ns * nc, 0.0);
  for (std::size_t i = 0; i < ns; ++i)
    for (std::size_t r = 0; r < nc; ++r) {
      double acc = src[r][i];
      for (std::size_t c = 0; c < nc; ++c) acc += g[r * nc + c] * src[c][i];
      t.at(i, r) = acc;
    }

  // Realized alpha lateralization.
  double left = 0.0, right = 0.0;
  std::vector<double> column(ns);
  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t i = 0; i < ns; ++i) column[i] = t.at(i, c);
    const double p = band_power(column, cfg.fs_hz, cfg.alpha_lo_hz, cfg.alpha_hi_hz);
    (t.hemisphere[c] == Hemisphere::Left ? left : right) += p;
  }
  rep.subject_id = t.subject_id;
  rep.trial_id = t.trial_id;
  rep.label = t.label;
  rep.alpha_left_right_ratio = left / right;
  rep.alpha_ipsi_contra_ratio = t.label == Direction::Left ? left / right : right / left;
  return t;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_subjects < 1 || n_trials < 2) throw std::invalid_argument("synth needs >= 1 subject and >= 2 trials");
  if (n_channels < 2 || n_channels % 2 != 0) throw std::invalid_argument("synth n_channels must be even");
  if (!(trial_s >= 10.0)) throw std::invalid_argument("synth trial_s must be at least 10 s");
  if (!(fs_hz > 2.0 * alpha_hi_hz)) throw std::invalid_argument("synth fs_hz too low for the alpha band");
  if (!(fingerprint_strength >= 0.0)) throw std::invalid_argument("fingerprint_strength must be >= 0");
  if (!(attention_strength >= 0.0 && attention_strength < 1.0))
    throw std::invalid_argument("attention_strength must lie in [0, 1)");
  if (!(noise_scale > 0.0)) throw std::invalid_argument("noise_scale must be positive");
  if (!(0.0 < alpha_lo_hz && alpha_lo_hz < alpha_hi_hz)) throw std::invalid_argument("bad alpha band");
}

std::string subject_name(std::size_t subject_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "S%02zu", subject_index + 1);
  return buf;
}

SynthCorpus generate_subject(const SynthConfig& cfg, std::size_t subject_index) {
  cfg.validate();
  SynthCorpus out;
  for (std::size_t i = 0; i < cfg.n_trials; ++i) {
    SynthTrialReport rep;
    out.trials.push_back(make_trial(cfg, subject_index, i, rep));
    out.report.trials.push_back(std::move(rep));
  }
  return out;
}

SynthCorpus generate(const SynthConfig& cfg) {
  cfg.validate();
  SynthCorpus out;
  for (std::size_t s = 0; s < cfg.n_subjects; ++s) {
    auto part = generate_subject(cfg, s);
    std::move(part.trials.begin(), part.trials.end(), std::back_inserter(out.trials));
    std::move(part.report.trials.begin(), part.report.trials.end(), std::back_inserter(out.report.trials));
  }
  return out;
}

double band_power(std::span<const double> x, double fs_hz, double lo_hz, double hi_hz) {
  const Sos band = butterworth_bandpass(8, lo_hz, hi_hz, fs_hz);
  const auto y = sosfiltfilt(band, x, static_cast<std::size_t>(3.0 * fs_hz / lo_hz));
  double ss = 0.0;
  for (double v : y) ss += v * v;
  return ss / static_cast<double>(y.size());
}

void write_synth_report(const SynthReport& report, const std::string& path) {
  nlohmann::json doc;
  doc["trials"] = nlohmann::json::array();
  for (const auto& t : report.trials)
    doc["trials"].push_back({{"subject_id", t.subject_id},
                             {"trial_id", t.trial_id},
                             {"label", to_code(t.label)},
                             {"alpha_left_right_ratio", t.alpha_left_right_ratio},
                             {"alpha_ipsi_contra_ratio", t.alpha_ipsi_contra_ratio},
                             {"fingerprint_freqs_hz", t.fingerprint_freqs_hz},
                             {"mixing_perturbation_norm", t.mixing_perturbation_norm}});
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << doc.dump(2) << '\n';
}

CalibrationResult calibrate(const SynthConfig& cfg, const CalibrationPipeline& pipeline,
                            const CalibrationOptions& options) {
  const bool attention = options.axis == CalibrationAxis::Attention;
  SynthConfig probe = cfg;
  probe.seed = cfg.seed + options.cohort_seed_offset;

  CalibrationResult res;
  res.config = cfg;
  const double target_mid = 0.5 * (options.target_lo + options.target_hi);
  double best_gap = std::numeric_limits<double>::infinity();

  auto run = [&](double value) {
    (attention ? probe.attention_strength : probe.fingerprint_strength) = value;
    const double acc = pipeline(probe);
    ++res.evaluations;
    res.trace.emplace_back(value, acc);
    const double gap = std::abs(acc - target_mid);
    if (gap < best_gap) {
      best_gap = gap;
      res.accuracy = acc;
      res.config = probe;
      res.config.seed = cfg.seed;
    }
    return acc;
  };
  auto in_band = [&](double acc) { return acc >= options.target_lo && acc <= options.target_hi; };

  // Strongest decodability the axis allows.
  const double easiest = attention ? options.hi : options.lo;
  const double acc_easy = run(easiest);
  if (in_band(acc_easy)) {
    res.converged = true;
    return res;
  }
  if (acc_easy < options.target_lo) {
    res.reachable = false;
    return res;
  }

  double lo = options.lo, hi = options.hi;
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double acc = run(mid);
    if (in_band(acc)) {
      res.converged = true;
      return res;
    }
    const bool too_easy = acc > options.target_hi;
    // Attention: easier means lower the value; fingerprint: easier means raise it.
    if (attention == too_easy)
      hi = mid;
    else
      lo = mid;
  }
  return res;
}

}  // namespace aad
