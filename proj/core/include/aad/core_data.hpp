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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aad {

/// Attended direction. The integer codes are part of the file format.
enum class Direction : std::uint8_t { Left = 0, Right = 1 };

enum class Hemisphere : std::uint8_t { Left, Right, Midline };

constexpr int to_code(Direction d) { return static_cast<int>(d); }
Direction direction_from_code(int code);
std::string_view to_string(Direction d);

std::string_view to_string(Hemisphere h);
Hemisphere hemisphere_from_string(std::string_view s);

/// One continuous recording with a single attention label.
///
/// Samples are time-major: samples[t * n_channels + c].
struct Trial {
  std::string subject_id;
  std::string trial_id;
  double fs_hz{0.0};
  std::size_t n_channels{0};
  std::size_t n_samples{0};
  std::vector<double> samples;
  Direction label{Direction::Left};
  std::vector<std::string> channel_names;
  std::vector<Hemisphere> hemisphere;

  double at(std::size_t t, std::size_t c) const { return samples[t * n_channels + c]; }
  double& at(std::size_t t, std::size_t c) { return samples[t * n_channels + c]; }
  double duration_s() const { return static_cast<double>(n_samples) / fs_hz; }
};

/// Throws std::invalid_argument naming the first violated invariant.
void validate(const Trial& trial);

/// Log-energy time-frequency representation of a whole trial.
///
/// energy is channels x frames x frequencies, row-major.
struct TfTrial {
  std::string subject_id;
  std::string trial_id;
  Direction label{Direction::Left};
  double frames_per_s{0.0};
  std::vector<double> freqs_hz;
  std::size_t n_channels{0};
  std::size_t n_frames{0};
  std::vector<double> energy;

  std::size_t n_freqs() const { return freqs_hz.size(); }
  double at(std::size_t c, std::size_t t, std::size_t f) const {
    return energy[(c * n_frames + t) * n_freqs() + f];
  }
  double& at(std::size_t c, std::size_t t, std::size_t f) {
    return energy[(c * n_frames + t) * n_freqs() + f];
  }
};

/// A decision window: a view onto frames [start, end) of a TfTrial.
/// The source trial must outlive the window.
struct TfWindow {
  const TfTrial* source{nullptr};
  std::size_t start{0};
  std::size_t end{0};
  Direction label{Direction::Left};

  std::size_t length() const { return end - start; }
  std::size_t n_channels() const { return source->n_channels; }
  std::size_t n_freqs() const { return source->n_freqs(); }
  std::size_t size() const { return n_channels() * length() * n_freqs(); }
  double at(std::size_t c, std::size_t t, std::size_t f) const {
    return source->at(c, start + t, f);
  }
  /// Contiguous T_w x F block of one channel.
  std::span<const double> channel(std::size_t c) const {
    const std::size_t nf = n_freqs();
    return {source->energy.data() + (c * source->n_frames + start) * nf, length() * nf};
  }
  bool overlaps(const TfWindow& other) const {
    return source == other.source && start < other.end && other.start < end;
  }
  friend bool operator==(const TfWindow& a, const TfWindow& b) {
    return a.source == b.source && a.start == b.start && a.end == b.end;
  }
};

struct ManifestEntry {
  std::string subject_id;
  std::string trial_id;
  std::filesystem::path path;
  Direction label{Direction::Left};
  double duration_s{0.0};
};

struct DatasetManifest {
  std::string name;
  std::vector<std::string> subjects;
  std::vector<ManifestEntry> trials;

  std::vector<const ManifestEntry*> trials_of(std::string_view subject) const;
};

// EEGTRIAL v1: one JSON header line, then n_samples * n_channels float32 LE values.
void write_trial(const Trial& trial, const std::filesystem::path& path);
Trial read_trial(const std::filesystem::path& path);

/// Serializes to the in-memory byte image of an EEGTRIAL v1 file.
std::string encode_trial(const Trial& trial);
Trial decode_trial(std::string_view bytes);

/// Relative trial paths are resolved against the manifest's directory.
DatasetManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

}  // namespace aad
