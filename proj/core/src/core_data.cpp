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

#include "aad/core_data.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <json.hpp>

namespace aad {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "EEGTRIAL payload encoding assumes a little-endian host");
static_assert(std::numeric_limits<float>::is_iec559);

}  // namespace

Direction direction_from_code(int code) {
  switch (code) {
    case 0: return Direction::Left;
    case 1: return Direction::Right;
    default: throw std::invalid_argument("direction code must be 0 or 1, got " + std::to_string(code));
  }
}

std::string_view to_string(Direction d) { return d == Direction::Left ? "left" : "right"; }

std::string_view to_string(Hemisphere h) {
  switch (h) {
    case Hemisphere::Left: return "left";
    case Hemisphere::Right: return "right";
    case Hemisphere::Midline: return "midline";
  }
  return "midline";
}

Hemisphere hemisphere_from_string(std::string_view s) {
  if (s == "left") return Hemisphere::Left;
  if (s == "right") return Hemisphere::Right;
  if (s == "midline") return Hemisphere::Midline;
  throw std::invalid_argument("unknown hemisphere tag '" + std::string(s) + "'");
}

void validate(const Trial& trial) {
  if (!(trial.fs_hz > 0.0) || !std::isfinite(trial.fs_hz))
    throw std::invalid_argument("trial fs_hz must be positive");
  if (trial.n_channels < 1) throw std::invalid_argument("trial needs at least one channel");
  if (static_cast<double>(trial.n_samples) < trial.fs_hz)
    throw std::invalid_argument("trial shorter than one second");
  if (trial.samples.size() != trial.n_samples * trial.n_channels)
    throw std::invalid_argument("sample buffer size does not match n_samples * n_channels");
  if (trial.channel_names.size() != trial.n_channels)
    throw std::invalid_argument("channel_names length differs from channel count");
  if (trial.hemisphere.size() != trial.n_channels)
    throw std::invalid_argument("hemisphere length differs from channel count");
  for (double v : trial.samples)
    if (!std::isfinite(v)) throw std::invalid_argument("trial contains non-finite samples");
}

std::vector<const ManifestEntry*> DatasetManifest::trials_of(std::string_view subject) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : trials)
    if (e.subject_id == subject) out.push_back(&e);
  return out;
}

std::string encode_trial(const Trial& trial) {
  validate(trial);
  json header;
  header["format"] = "EEGTRIAL";
  header["version"] = 1;
  header["subject_id"] = trial.subject_id;
  header["trial_id"] = trial.trial_id;
  header["fs_hz"] = trial.fs_hz;
  header["n_channels"] = trial.n_channels;
  header["n_samples"] = trial.n_samples;
  header["label"] = to_code(trial.label);
  header["channel_names"] = trial.channel_names;
  json hemi = json::array();
  for (auto h : trial.hemisphere) hemi.push_back(to_string(h));
  header["hemisphere"] = std::move(hemi);

  std::string out = header.dump();
  out.push_back('\n');
  const std::size_t head = out.size();
  out.resize(head + trial.samples.size() * sizeof(float));
  char* dst = out.data() + head;
  for (double v : trial.samples) {
    const auto f = static_cast<float>(v);
    if (!std::isfinite(f)) throw std::invalid_argument("sample not representable as finite float32");
    std::memcpy(dst, &f, sizeof f);
    dst += sizeof f;
  }
  return out;
}

Trial decode_trial(std::string_view bytes) {
  const auto nl = bytes.find('\n');
  if (nl == std::string_view::npos) throw std::runtime_error("malformed header: no newline terminator");
  json header;
  try {
    header = json::parse(bytes.substr(0, nl));
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed header: ") + e.what());
  }

  Trial t;
  try {
    if (header.at("format").get<std::string>() != "EEGTRIAL")
      throw std::runtime_error("malformed header: format is not EEGTRIAL");
    if (header.at("version").get<int>() != 1)
      throw std::runtime_error("malformed header: unsupported version");
    t.subject_id = header.at("subject_id").get<std::string>();
    t.trial_id = header.at("trial_id").get<std::string>();
    t.fs_hz = header.at("fs_hz").get<double>();
    t.n_channels = header.at("n_channels").get<std::size_t>();
    t.n_samples = header.at("n_samples").get<std::size_t>();
    t.label = direction_from_code(header.at("label").get<int>());
    t.channel_names = header.at("channel_names").get<std::vector<std::string>>();
    for (const auto& h : header.at("hemisphere")) t.hemisphere.push_back(hemisphere_from_string(h.get<std::string>()));
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed header: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("malformed header: ") + e.what());
  }

  const auto payload = bytes.substr(nl + 1);
  const std::size_t count = t.n_samples * t.n_channels;
  if (payload.size() != count * sizeof(float)) {
    std::ostringstream msg;
    msg << "payload size mismatch: expected " << count * sizeof(float) << " bytes, got " << payload.size();
    throw std::runtime_error(msg.str());
  }
  t.samples.resize(count);
  const char* src = payload.data();
  for (std::size_t i = 0; i < count; ++i, src += sizeof(float)) {
    float f;
    std::memcpy(&f, src, sizeof f);
    if (std::isnan(f)) throw std::runtime_error("NaN in payload at value " + std::to_string(i));
    t.samples[i] = f;
  }
  validate(t);
  return t;
}

void write_trial(const Trial& trial, const std::filesystem::path& path) {
  const std::string bytes = encode_trial(trial);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Trial read_trial(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_trial(bytes);
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("manifest " + path.string() + " does not parse: " + e.what());
  }

  DatasetManifest m;
  m.name = doc.value("name", std::string{});
  const auto base = path.parent_path();
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& e : doc.at("trials")) {
    ManifestEntry entry;
    entry.subject_id = e.at("subject_id").get<std::string>();
    entry.trial_id = e.at("trial_id").get<std::string>();
    std::filesystem::path p = e.at("path").get<std::string>();
    entry.path = p.is_absolute() ? p : base / p;
    entry.label = direction_from_code(e.at("label").get<int>());
    entry.duration_s = e.value("duration_s", 0.0);
    if (!seen.emplace(entry.subject_id, entry.trial_id).second)
      throw std::runtime_error("duplicate trial id '" + entry.trial_id + "' for subject '" + entry.subject_id + "'");
    if (!std::filesystem::exists(entry.path))
      throw std::runtime_error("missing trial file " + entry.path.string());
    m.trials.push_back(std::move(entry));
  }
  if (doc.contains("subjects")) {
    m.subjects = doc.at("subjects").get<std::vector<std::string>>();
  } else {
    std::set<std::string> subjects;
    for (const auto& e : m.trials)
      if (subjects.insert(e.subject_id).second) m.subjects.push_back(e.subject_id);
  }
  return m;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  json doc;
  doc["name"] = manifest.name;
  doc["subjects"] = manifest.subjects;
  json trials = json::array();
  const auto base = path.parent_path();
  for (const auto& e : manifest.trials) {
    auto rel = e.path.is_absolute() && base.is_absolute() ? e.path.lexically_relative(base) : e.path;
    if (rel.empty()) rel = e.path;
    trials.push_back({{"subject_id", e.subject_id},
                      {"trial_id", e.trial_id},
                      {"path", rel.generic_string()},
                      {"label", to_code(e.label)},
                      {"duration_s", e.duration_s}});
  }
  doc["trials"] = std::move(trials);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
}

}  // namespace aad
