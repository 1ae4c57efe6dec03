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

#include "aad/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "aad/rng.hpp"

namespace aad {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::atomic<std::size_t> g_feature_computations{0};

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string hex_float(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const char* where) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : obj.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError(std::string("unknown key '") + key + "' in " + where);
}

template <class T>
void read_opt(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

SynthConfig synth_from_json(const json& j) {
  check_keys(j,
             {"n_subjects", "n_trials", "trial_s", "n_channels", "fs_hz", "fingerprint_strength",
              "attention_strength", "noise_scale", "alpha_lo_hz", "alpha_hi_hz", "alpha_amplitude",
              "fingerprint_amplitude", "fingerprint_oscillators", "seed"},
             "synth");
  SynthConfig c;
  read_opt(j, "n_subjects", c.n_subjects);
  read_opt(j, "n_trials", c.n_trials);
  read_opt(j, "trial_s", c.trial_s);
  read_opt(j, "n_channels", c.n_channels);
  read_opt(j, "fs_hz", c.fs_hz);
  read_opt(j, "fingerprint_strength", c.fingerprint_strength);
  read_opt(j, "attention_strength", c.attention_strength);
  read_opt(j, "noise_scale", c.noise_scale);
  read_opt(j, "alpha_lo_hz", c.alpha_lo_hz);
  read_opt(j, "alpha_hi_hz", c.alpha_hi_hz);
  read_opt(j, "alpha_amplitude", c.alpha_amplitude);
  read_opt(j, "fingerprint_amplitude", c.fingerprint_amplitude);
  read_opt(j, "fingerprint_oscillators", c.fingerprint_oscillators);
  read_opt(j, "seed", c.seed);
  return c;
}

json synth_to_json(const SynthConfig& c) {
  return {{"n_subjects", c.n_subjects},
          {"n_trials", c.n_trials},
          {"trial_s", c.trial_s},
          {"n_channels", c.n_channels},
          {"fs_hz", c.fs_hz},
          {"fingerprint_strength", c.fingerprint_strength},
          {"attention_strength", c.attention_strength},
          {"noise_scale", c.noise_scale},
          {"alpha_lo_hz", c.alpha_lo_hz},
          {"alpha_hi_hz", c.alpha_hi_hz},
          {"alpha_amplitude", c.alpha_amplitude},
          {"fingerprint_amplitude", c.fingerprint_amplitude},
          {"fingerprint_oscillators", c.fingerprint_oscillators},
          {"seed", c.seed}};
}

TrainConfig train_from_json(const json& j, TrainConfig c) {
  check_keys(j,
             {"epochs", "batch_size", "learning_rate", "optimizer", "adam_beta1", "adam_beta2", "adam_eps",
              "precision", "prototype_weight_lo", "prototype_weight_hi", "distinct_trials", "bn_momentum",
              "bn_eps", "prelu_init"},
             "train");
  read_opt(j, "epochs", c.epochs);
  read_opt(j, "batch_size", c.batch_size);
  read_opt(j, "learning_rate", c.learning_rate);
  read_opt(j, "adam_beta1", c.adam_beta1);
  read_opt(j, "adam_beta2", c.adam_beta2);
  read_opt(j, "adam_eps", c.adam_eps);
  read_opt(j, "prototype_weight_lo", c.prototype.weight_lo);
  read_opt(j, "prototype_weight_hi", c.prototype.weight_hi);
  read_opt(j, "distinct_trials", c.prototype.distinct_trials);
  read_opt(j, "bn_momentum", c.net.bn_momentum);
  read_opt(j, "bn_eps", c.net.bn_eps);
  read_opt(j, "prelu_init", c.net.prelu_init);
  if (j.contains("optimizer")) {
    const auto s = j.at("optimizer").get<std::string>();
    if (s == "adam")
      c.optimizer = OptimizerKind::Adam;
    else if (s == "sgd")
      c.optimizer = OptimizerKind::Sgd;
    else
      throw ConfigError("optimizer must be 'adam' or 'sgd'");
  }
  if (j.contains("precision")) {
    const auto s = j.at("precision").get<std::string>();
    if (s == "float32")
      c.precision = Precision::Float32;
    else if (s == "float64")
      c.precision = Precision::Float64;
    else
      throw ConfigError("precision must be 'float32' or 'float64'");
  }
  return c;
}

std::string features_tag(const PreprocessConfig& p, const CwtConfig& c) {
  std::string tag = "pre:" + hex_float(p.target_fs_hz) + ',' + hex_float(p.band_lo_hz) + ',' +
                    hex_float(p.band_hi_hz) + ',' + std::to_string(p.filter_order) + ',' +
                    (p.zero_phase ? "zp" : "causal") + ";cwt:" + hex_float(c.frames_per_s) + ',' +
                    hex_float(c.wavelet_cycles) + ',' + hex_float(c.energy_floor) + ',' + hex_float(c.support_sigmas);
  for (double f : c.freqs_hz) tag += ',' + hex_float(f);
  return tag;
}

// Feature cache file: magic, dims, then doubles.
constexpr char kCacheMagic[8] = {'A', 'A', 'D', 'T', 'F', 'C', '1', '\0'};

bool load_cached(const fs::path& path, const Trial& trial, const CwtConfig& cwt, TfTrial& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  char magic[8];
  std::uint64_t dims[3];
  if (!in.read(magic, 8) || std::memcmp(magic, kCacheMagic, 8) != 0) return false;
  if (!in.read(reinterpret_cast<char*>(dims), sizeof dims)) return false;
  if (dims[0] != trial.n_channels || dims[2] != cwt.freqs_hz.size()) return false;
  out.subject_id = trial.subject_id;
  out.trial_id = trial.trial_id;
  out.label = trial.label;
  out.frames_per_s = cwt.frames_per_s;
  out.freqs_hz = cwt.freqs_hz;
  out.n_channels = dims[0];
  out.n_frames = dims[1];
  out.energy.resize(dims[0] * dims[1] * dims[2]);
  const auto bytes = static_cast<std::streamsize>(out.energy.size() * sizeof(double));
  if (!in.read(reinterpret_cast<char*>(out.energy.data()), bytes)) return false;
  return in.peek() == std::char_traits<char>::eof();
}

void store_cached(const fs::path& path, const TfTrial& tf) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return;  // a cache that cannot be written is not an error
    const std::uint64_t dims[3] = {tf.n_channels, tf.n_frames, tf.n_freqs()};
    out.write(kCacheMagic, 8);
    out.write(reinterpret_cast<const char*>(dims), sizeof dims);
    out.write(reinterpret_cast<const char*>(tf.energy.data()),
              static_cast<std::streamsize>(tf.energy.size() * sizeof(double)));
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fs::remove(tmp, ec);
}

// Runs fn(i) for i in [0, n) on up to `workers` threads.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(workers, n));
  if (n_threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& th : pool) th.join();
}

struct SubjectData {
  std::string id;
  std::vector<Trial> trials;
};

class Source {
 public:
  explicit Source(const ExperimentConfig& cfg) : cfg_(cfg) {
    if (cfg.manifest) {
      manifest_ = load_manifest(*cfg.manifest);
      subjects_ = manifest_.subjects;
    } else {
      for (std::size_t s = 0; s < cfg.synth.n_subjects; ++s) subjects_.push_back(subject_name(s));
    }
    if (!cfg.subjects.empty()) {
      for (const auto& s : cfg.subjects)
        if (std::find(subjects_.begin(), subjects_.end(), s) == subjects_.end())
          throw ConfigError("unknown subject '" + s + "'");
      subjects_ = cfg.subjects;
    }
  }

  const std::vector<std::string>& subjects() const { return subjects_; }

  SubjectData load(const std::string& subject) const {
    SubjectData out{subject, {}};
    if (cfg_.manifest) {
      for (const auto* e : manifest_.trials_of(subject)) {
        Trial t = read_trial(e->path);
        if (t.label != e->label)
          throw std::runtime_error("label of " + e->path.string() + " disagrees with the manifest");
        out.trials.push_back(std::move(t));
      }
    } else {
      std::size_t idx = 0;
      while (idx < cfg_.synth.n_subjects && subject_name(idx) != subject) ++idx;
      if (idx == cfg_.synth.n_subjects) throw std::runtime_error("unknown subject '" + subject + "'");
      out.trials = generate_subject(cfg_.synth, idx).trials;
    }
    return out;
  }

 private:
  const ExperimentConfig& cfg_;
  DatasetManifest manifest_;
  std::vector<std::string> subjects_;
};

struct Job {
  JobKey key;
  const FoldPlan* plan{nullptr};
  double stride_s{1.0};
};

}  // namespace

TrainConfig ExperimentConfig::default_train() {
  TrainConfig t;
  t.precision = Precision::Float32;
  return t;
}

void ExperimentConfig::validate() const {
  if (strategies.empty()) throw ConfigError("strategies must not be empty");
  if (window_lengths_s.empty()) throw ConfigError("window_lengths_s must not be empty");
  if (k_values.empty()) throw ConfigError("k_values must not be empty");
  if (n_repetitions == 0) throw ConfigError("n_repetitions must be positive");
  if (workers == 0) throw ConfigError("workers must be positive");
  if (!(stride_s > 0.0)) throw ConfigError("stride_s must be positive");
  for (double w : window_lengths_s)
    if (!(w > 0.0)) throw ConfigError("window lengths must be positive");
  try {
    for (double w : window_lengths_s) {
      frames_for(w, cwt.frames_per_s);
      frames_for(std::min(w, stride_s), cwt.frames_per_s);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("window grid does not align with the frame rate: ") + e.what());
  }
  for (std::size_t k : k_values)
    if (k == 0) throw ConfigError("k values must be positive");
  std::set<Strategy> s(strategies.begin(), strategies.end());
  std::set<double> w(window_lengths_s.begin(), window_lengths_s.end());
  std::set<std::size_t> k(k_values.begin(), k_values.end());
  if (s.size() != strategies.size() || w.size() != window_lengths_s.size() || k.size() != k_values.size())
    throw ConfigError("grid axes must not contain duplicates");
  try {
    preprocess.validate();
    cwt.validate(preprocess.target_fs_hz);
    train.validate();
    if (!manifest) synth.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::string ExperimentConfig::dataset_name() const {
  if (!manifest) return "synth";
  return load_manifest(*manifest).name;
}

ExperimentConfig parse_experiment_config(std::string_view json_text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j,
             {"dataset", "preprocess", "cwt", "strategies", "window_lengths_s", "stride_s", "k_values", "train",
              "n_repetitions", "workers", "out_dir", "save_checkpoints", "seed", "subjects"},
             "config");
  ExperimentConfig c;
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    check_keys(d, {"manifest", "synth"}, "dataset");
    if (d.contains("manifest") == d.contains("synth"))
      throw ConfigError("dataset needs exactly one of 'manifest' or 'synth'");
    if (d.contains("manifest")) {
      fs::path p = d.at("manifest").get<std::string>();
      c.manifest = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    } else {
      c.synth = synth_from_json(d.at("synth"));
    }
  }
  if (j.contains("preprocess")) {
    const auto& p = j.at("preprocess");
    check_keys(p, {"target_fs_hz", "band_lo_hz", "band_hi_hz", "filter_order", "zero_phase"}, "preprocess");
    read_opt(p, "target_fs_hz", c.preprocess.target_fs_hz);
    read_opt(p, "band_lo_hz", c.preprocess.band_lo_hz);
    read_opt(p, "band_hi_hz", c.preprocess.band_hi_hz);
    read_opt(p, "filter_order", c.preprocess.filter_order);
    read_opt(p, "zero_phase", c.preprocess.zero_phase);
  }
  if (j.contains("cwt")) {
    const auto& w = j.at("cwt");
    check_keys(w, {"freqs_hz", "frames_per_s", "wavelet_cycles", "energy_floor", "support_sigmas"}, "cwt");
    read_opt(w, "freqs_hz", c.cwt.freqs_hz);
    read_opt(w, "frames_per_s", c.cwt.frames_per_s);
    read_opt(w, "wavelet_cycles", c.cwt.wavelet_cycles);
    read_opt(w, "energy_floor", c.cwt.energy_floor);
    read_opt(w, "support_sigmas", c.cwt.support_sigmas);
  }
  if (j.contains("strategies")) {
    c.strategies.clear();
    for (const auto& s : j.at("strategies")) {
      try {
        c.strategies.push_back(strategy_from_string(s.get<std::string>()));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
  }
  read_opt(j, "window_lengths_s", c.window_lengths_s);
  read_opt(j, "stride_s", c.stride_s);
  read_opt(j, "k_values", c.k_values);
  if (j.contains("train")) c.train = train_from_json(j.at("train"), c.train);
  read_opt(j, "n_repetitions", c.n_repetitions);
  read_opt(j, "workers", c.workers);
  read_opt(j, "save_checkpoints", c.save_checkpoints);
  read_opt(j, "seed", c.seed);
  read_opt(j, "subjects", c.subjects);
  if (j.contains("out_dir")) {
    fs::path p = j.at("out_dir").get<std::string>();
    c.out_dir = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  return parse_experiment_config(read_text(path), path.parent_path());
}

SynthConfig parse_synth_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (j.contains("dataset")) {
    if (!j.at("dataset").contains("synth")) throw ConfigError("config has no synthetic dataset section");
    return synth_from_json(j.at("dataset").at("synth"));
  }
  if (j.contains("synth")) return synth_from_json(j.at("synth"));
  return synth_from_json(j);
}

std::string synth_config_json(const SynthConfig& cfg) { return synth_to_json(cfg).dump(2); }

std::vector<Strategy> parse_strategy_list(std::string_view text) {
  std::vector<Strategy> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find(',', pos), text.size());
    try {
      out.push_back(strategy_from_string(text.substr(pos, end - pos)));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    pos = end + 1;
  }
  return out;
}

namespace {

template <class T>
std::vector<T> parse_list(std::string_view text, const char* what) {
  std::vector<T> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find(',', pos), text.size());
    const auto item = text.substr(pos, end - pos);
    T v{};
    auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size())
      throw ConfigError(std::string("bad ") + what + " '" + std::string(item) + "'");
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

// Rows of an interrupted run. Only a final line without its newline may be
// torn by a crash; it is dropped, while malformed complete lines are errors.
std::vector<RunRecord> read_resumable(const fs::path& path) {
  const std::string text = read_text(path);
  std::vector<RunRecord> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) break;
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line == results_csv_header()) continue;
    out.push_back(parse_csv_line(line));
  }
  return out;
}

}  // namespace

std::vector<double> parse_real_list(std::string_view text) { return parse_list<double>(text, "number"); }
std::vector<std::size_t> parse_size_list(std::string_view text) { return parse_list<std::size_t>(text, "integer"); }

std::string JobKey::to_string() const {
  return subject + '/' + std::string(aad::to_string(strategy)) + '/' + shortest(window_s) + "s/K" + std::to_string(k) +
         "/r" + std::to_string(repetition) + "/f" + std::to_string(fold);
}

JobKey key_of(const RunRecord& r) { return {r.subject_id, r.strategy, r.window_s, r.k, r.repetition, r.fold}; }

double job_stride(double window_s, double stride_s) { return std::min(window_s, stride_s); }

std::uint64_t plan_seed(std::uint64_t master, std::string_view subject, Strategy strategy, double window_s) {
  return derive_seed(master, "plan/" + std::string(subject) + '/' + std::string(to_string(strategy)) + '/' +
                                 shortest(window_s));
}

std::uint64_t job_seed(std::uint64_t master, const JobKey& key) { return derive_seed(master, "job/" + key.to_string()); }

std::size_t feature_computations() { return g_feature_computations.load(); }

RunOutcome run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  cfg.validate();
  const std::string dataset = cfg.dataset_name();
  const Source source(cfg);
  const bool persist = !cfg.out_dir.empty();

  fs::path cache_dir;
  if (options.cache_dir) {
    cache_dir = *options.cache_dir;
  } else if (const char* env = std::getenv("AAD_BENCH_CACHE_DIR"); env && *env) {
    cache_dir = env;
  } else if (persist) {
    cache_dir = cfg.out_dir / "cache";
  }
  const std::string tag = features_tag(cfg.preprocess, cfg.cwt);

  RunOutcome outcome;
  std::set<JobKey> done;
  std::ofstream results, losses;
  const fs::path results_path = cfg.out_dir / "results.csv";
  if (persist) {
    fs::create_directories(cfg.out_dir);
    if (options.resume && fs::exists(results_path)) {
      for (auto& r : read_resumable(results_path)) {
        if (r.dataset != dataset) continue;
        if (done.insert(key_of(r)).second) outcome.records.push_back(std::move(r));
      }
    }
    results.open(results_path, std::ios::trunc);
    if (!results) throw ConfigError("cannot write " + results_path.string());
    results << results_csv_header() << '\n';
    for (const auto& r : outcome.records) results << to_csv_line(r) << '\n';
    results.flush();
    const fs::path losses_path = cfg.out_dir / "losses.csv";
    const bool keep_losses = options.resume && fs::exists(losses_path);
    losses.open(losses_path, keep_losses ? std::ios::app : std::ios::trunc);
    if (!losses) throw ConfigError("cannot write " + losses_path.string());
    if (!keep_losses) losses << "job,epoch,loss\n";
    if (cfg.save_checkpoints) fs::create_directories(cfg.out_dir / "models");
  }

  std::mutex mu;
  auto log = [&](const std::string& line) {
    if (!options.verbose) return;
    std::lock_guard lock(mu);
    std::fprintf(stderr, "%s\n", line.c_str());
  };

  const std::size_t grid_per_subject =
      cfg.strategies.size() * cfg.window_lengths_s.size() * cfg.k_values.size() * cfg.n_repetitions * kFolds;
  outcome.jobs_total = grid_per_subject * source.subjects().size();
  bool reported_params = false;

  for (const auto& subject : source.subjects()) {
    // Skip the feature work entirely when a resumed subject is complete.
    std::vector<JobKey> pending_keys;
    for (Strategy s : cfg.strategies)
      for (double w : cfg.window_lengths_s)
        for (std::size_t k : cfg.k_values)
          for (std::size_t r = 0; r < cfg.n_repetitions; ++r)
            for (std::size_t f = 0; f < kFolds; ++f) {
              JobKey key{subject, s, w, k, r, f};
              if (done.count(key))
                ++outcome.jobs_skipped;
              else
                pending_keys.push_back(std::move(key));
            }
    if (pending_keys.empty()) continue;

    SubjectData data;
    std::vector<TfTrial> tf;
    try {
      data = source.load(subject);
      if (data.trials.empty()) throw std::runtime_error("subject has no trials");
      tf.resize(data.trials.size());
      std::atomic<std::size_t> computed{0}, loaded{0};
      std::vector<std::string> errors(data.trials.size());
      parallel_for(data.trials.size(), cfg.workers, [&](std::size_t i) {
        try {
          const Trial& t = data.trials[i];
          validate(t);
          fs::path cache_file;
          if (!cache_dir.empty()) {
            const std::string_view raw(reinterpret_cast<const char*>(t.samples.data()),
                                       t.samples.size() * sizeof(double));
            const auto h = hash_bytes(raw, hash_bytes(tag + '|' + hex_float(t.fs_hz) + '|' +
                                                      std::to_string(t.n_channels)));
            cache_file = cache_dir / (t.subject_id + '_' + t.trial_id + '_' + hex64(h) + ".tf");
            if (load_cached(cache_file, t, cfg.cwt, tf[i])) {
              ++loaded;
              return;
            }
          }
          tf[i] = cwt_log_energy(preprocess(t, cfg.preprocess), cfg.cwt);
          ++g_feature_computations;
          ++computed;
          if (!cache_file.empty()) store_cached(cache_file, tf[i]);
        } catch (const std::exception& e) {
          errors[i] = data.trials[i].trial_id + ": " + e.what();
        }
      });
      for (const auto& e : errors)
        if (!e.empty()) throw std::runtime_error(e);
      outcome.features_computed += computed;
      outcome.features_loaded += loaded;
    } catch (const std::exception& e) {
      log("subject " + subject + " failed: " + e.what());
      for (auto& key : pending_keys) outcome.failures.push_back({std::move(key), e.what()});
      continue;
    }
    if (!reported_params) {
      reported_params = true;
      for (double w : cfg.window_lengths_s) {
        const std::size_t t_w = frames_for(w, cfg.cwt.frames_per_s);
        const auto n = init_params(tf.front().n_channels, t_w, tf.front().n_freqs(), 0).learnable_count();
        log("model for " + shortest(w) + " s windows (C=" + std::to_string(tf.front().n_channels) +
            ", T_w=" + std::to_string(t_w) + ", F=" + std::to_string(tf.front().n_freqs()) +
            "): " + std::to_string(n) + " learnable parameters");
      }
    }

    // Fold plans per (strategy, window); shared by every K.
    std::map<std::pair<Strategy, double>, std::vector<FoldPlan>> plans;
    std::map<std::pair<Strategy, double>, std::string> plan_errors;
    for (Strategy s : cfg.strategies)
      for (double w : cfg.window_lengths_s) {
        try {
          plans[{s, w}] = repeat_plans(tf, s, w, job_stride(w, cfg.stride_s), cfg.n_repetitions,
                                       plan_seed(cfg.seed, subject, s, w));
        } catch (const std::exception& e) {
          plan_errors[{s, w}] = e.what();
        }
      }

    std::vector<Job> jobs;
    for (auto& key : pending_keys) {
      const auto id = std::make_pair(key.strategy, key.window_s);
      if (auto it = plan_errors.find(id); it != plan_errors.end()) {
        outcome.failures.push_back({std::move(key), it->second});
        continue;
      }
      const FoldPlan* plan = &plans.at(id).at(key.repetition * kFolds + key.fold);
      jobs.push_back({std::move(key), plan, job_stride(id.second, cfg.stride_s)});
    }

    parallel_for(jobs.size(), cfg.workers, [&](std::size_t i) {
      const Job& job = jobs[i];
      try {
        if (job.plan->test.empty()) throw std::runtime_error("fold has no test windows");
        TrainConfig tc = cfg.train;
        tc.prototype.k = job.key.k;
        tc.seed = job_seed(cfg.seed, job.key);
        const TrainedModel model = train(job.plan->train, tc);
        RunRecord rec;
        rec.dataset = dataset;
        rec.subject_id = job.key.subject;
        rec.strategy = job.key.strategy;
        rec.window_s = job.key.window_s;
        rec.stride_s = job.stride_s;
        rec.k = job.key.k;
        rec.model = model_name(job.key.k);
        rec.repetition = job.key.repetition;
        rec.fold = job.key.fold;
        rec.accuracy = evaluate_windows(model, job.plan->test);
        rec.n_test_windows = job.plan->test.size();
        rec.seed = tc.seed;
        const std::string name = job.key.to_string();
        if (persist && cfg.save_checkpoints) {
          std::string file = name;
          std::replace(file.begin(), file.end(), '/', '_');
          write_checkpoint(model.params, cfg.out_dir / "models" / (file + ".ckpt"));
        }
        std::lock_guard lock(mu);
        if (persist) {
          for (std::size_t e = 0; e < model.history.size(); ++e)
            losses << name << ',' << e << ',' << model.history[e] << '\n';
          losses.flush();
          results << to_csv_line(rec) << '\n';
          results.flush();
        }
        if (options.verbose)
          std::fprintf(stderr, "[%zu/%zu] %s acc=%.4f\n", outcome.records.size() + 1, outcome.jobs_total,
                       job.key.to_string().c_str(), rec.accuracy);
        outcome.records.push_back(std::move(rec));
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        if (options.verbose) std::fprintf(stderr, "job %s failed: %s\n", job.key.to_string().c_str(), e.what());
        outcome.failures.push_back({job.key, e.what()});
      }
    });
  }

  outcome.records = canonical_order(std::move(outcome.records));
  std::sort(outcome.failures.begin(), outcome.failures.end(),
            [](const JobFailure& a, const JobFailure& b) { return a.key < b.key; });

  if (persist) {
    results.close();
    losses.close();
    if (!outcome.failures.empty()) {
      std::ofstream out(cfg.out_dir / "failures.log", std::ios::trunc);
      for (const auto& f : outcome.failures) out << f.key.to_string() << ": " << f.message << '\n';
    }
    if (!outcome.records.empty()) {
      std::vector<std::string> missing;
      const auto subjects = summarize_partial(outcome.records, cfg.n_repetitions, kFolds, missing);
      if (!missing.empty()) log("warning: " + std::to_string(missing.size()) + " incomplete result cells");
      if (!subjects.empty()) {
        const auto summaries = aggregate(subjects);
        emit_tables(outcome.records, summaries, compare_k(subjects), slope_table(summaries), cfg.out_dir);
      } else {
        write_results_csv(outcome.records, results_path);
      }
    }
  }
  return outcome;
}

DatasetManifest write_synth_corpus(const SynthConfig& cfg, const fs::path& out_dir) {
  const SynthCorpus corpus = generate(cfg);
  fs::create_directories(out_dir / "trials");
  DatasetManifest m;
  m.name = "synth";
  for (std::size_t s = 0; s < cfg.n_subjects; ++s) m.subjects.push_back(subject_name(s));
  for (const auto& t : corpus.trials) {
    const fs::path rel = fs::path("trials") / (t.subject_id + '_' + t.trial_id + ".eegtrial");
    write_trial(t, out_dir / rel);
    m.trials.push_back({t.subject_id, t.trial_id, out_dir / rel, t.label, t.duration_s()});
  }
  write_manifest(m, out_dir / "manifest.json");
  write_synth_report(corpus.report, (out_dir / "synth_report.json").string());
  std::ofstream(out_dir / "synth_config.json", std::ios::trunc) << synth_config_json(cfg) << '\n';
  return m;
}

ReportOutcome report_results(const fs::path& results_csv, const fs::path& out_dir) {
  if (!fs::exists(results_csv)) throw ConfigError("results file not found: " + results_csv.string());
  const auto records = read_results_csv(results_csv);
  if (records.empty()) throw ConfigError("results file has no records: " + results_csv.string());
  std::size_t n_rep = 0;
  for (const auto& r : records) n_rep = std::max(n_rep, r.repetition + 1);

  ReportOutcome out;
  out.n_records = records.size();
  const auto subjects = summarize_partial(records, n_rep, kFolds, out.warnings);
  if (subjects.empty()) throw std::runtime_error("no complete (subject, configuration) cell in " + results_csv.string());
  const auto summaries = aggregate(subjects);
  emit_tables(records, summaries, compare_k(subjects), slope_table(summaries), out_dir);
  if (!out.warnings.empty()) {
    std::ofstream w(out_dir / "warnings.txt", std::ios::trunc);
    for (const auto& line : out.warnings) w << line << '\n';
  }
  return out;
}

double synth_pipeline_accuracy(const SynthConfig& synth, const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  cfg.manifest.reset();
  cfg.synth = synth;
  cfg.strategies = {Strategy::CrossTrial_I};
  cfg.window_lengths_s = {1.0};
  cfg.k_values = {1};
  cfg.out_dir.clear();
  cfg.subjects.clear();
  RunOptions opt;
  opt.verbose = false;
  const auto outcome = run_experiment(cfg, opt);
  if (!outcome.failures.empty())
    throw std::runtime_error("calibration pipeline job failed: " + outcome.failures.front().message);
  double sum = 0.0;
  for (const auto& r : outcome.records) sum += r.accuracy;
  return sum / static_cast<double>(outcome.records.size());
}

}  // namespace aad
