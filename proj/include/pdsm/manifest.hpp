// Copyright 2026 The PDSM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Dataset manifest: a JSON index of samples whose spectrogram and
// posteriorgram live in NPY files next to it. Paths inside the manifest are
// relative to the manifest's directory. See docs/formats.md.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pdsm/alignment.hpp"
#include "pdsm/npy.hpp"
#include "pdsm/types.hpp"

namespace pdsm {

inline constexpr const char* kManifestFormat = "pdsm-dataset";

struct FrameWindow {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  std::size_t length() const noexcept { return end - start; }
  friend bool operator==(const FrameWindow&, const FrameWindow&) = default;
};

struct ManifestEntry {
  std::string sample_id;
  std::string split;  // "train" or "test"
  std::string label;
  std::string spectrogram;    // relative path
  std::string posteriorgram;  // relative path, may be empty
  std::optional<FrameWindow> window;         // noise task ground truth
  std::vector<std::size_t> corrupted_segments;  // fake-phoneme ground truth
  std::string source;  // sample this one was derived from, if any
};

struct DatasetManifest {
  std::string task;
  std::uint64_t seed = 0;
  nlohmann::json generator = nlohmann::json::object();
  std::vector<std::string> labels;  // labels[c] names class c
  std::vector<std::string> vocab;
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;  // not serialized

  std::size_t class_of(const ManifestEntry& e) const {
    for (std::size_t c = 0; c < labels.size(); ++c)
      if (labels[c] == e.label) return c;
    throw ValidationError("manifest: sample '" + e.sample_id + "' has unknown label '" + e.label + "'");
  }

  std::vector<const ManifestEntry*> split(std::string_view name) const {
    std::vector<const ManifestEntry*> out;
    for (const auto& e : entries)
      if (name.empty() || e.split == name) out.push_back(&e);
    return out;
  }

  const ManifestEntry& find(std::string_view sample_id) const {
    for (const auto& e : entries)
      if (e.sample_id == sample_id) return e;
    throw ValidationError("manifest: no sample '" + std::string(sample_id) + "'");
  }

  Spectrogram load_spectrogram(const ManifestEntry& e) const {
    Spectrogram s{load_matrix(base_dir / e.spectrogram), e.sample_id};
    s.validate();
    return s;
  }

  Posteriorgram load_posteriorgram(const ManifestEntry& e) const {
    require(!e.posteriorgram.empty(), "manifest: sample '" + e.sample_id + "' has no posteriorgram");
    Posteriorgram p{load_matrix(base_dir / e.posteriorgram), vocab};
    p.validate();
    return p;
  }
};

inline nlohmann::json to_json(const ManifestEntry& e) {
  nlohmann::json j{{"sample_id", e.sample_id},
                   {"split", e.split},
                   {"label", e.label},
                   {"spectrogram", e.spectrogram}};
  if (!e.posteriorgram.empty()) j["posteriorgram"] = e.posteriorgram;
  nlohmann::json gt = nullptr;
  if (e.window) gt = {{"window", {e.window->start, e.window->end}}};
  if (!e.corrupted_segments.empty()) gt = {{"segments", e.corrupted_segments}};
  j["ground_truth"] = gt;
  if (!e.source.empty()) j["source"] = e.source;
  return j;
}

inline nlohmann::json to_json(const DatasetManifest& m) {
  nlohmann::json j{{"format", kManifestFormat}, {"version", 1},        {"task", m.task},
                   {"seed", m.seed},            {"generator", m.generator}, {"labels", m.labels},
                   {"vocab", m.vocab}};
  j["entries"] = nlohmann::json::array();
  for (const auto& e : m.entries) j["entries"].push_back(to_json(e));
  return j;
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  try {
    require(j.at("format").get<std::string>() == kManifestFormat, "manifest: unexpected format tag");
    require(j.at("version").get<int>() == 1, "manifest: unsupported version");
    m.task = j.at("task").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.generator = j.value("generator", nlohmann::json::object());
    m.labels = j.at("labels").get<std::vector<std::string>>();
    m.vocab = j.value("vocab", std::vector<std::string>{});
    std::set<std::string> ids;
    for (const auto& je : j.at("entries")) {
      ManifestEntry e;
      e.sample_id = je.at("sample_id").get<std::string>();
      e.split = je.value("split", "");
      e.label = je.at("label").get<std::string>();
      e.spectrogram = je.at("spectrogram").get<std::string>();
      e.posteriorgram = je.value("posteriorgram", "");
      e.source = je.value("source", "");
      if (je.contains("ground_truth") && !je["ground_truth"].is_null()) {
        const auto& gt = je["ground_truth"];
        if (gt.contains("window")) {
          const auto w = gt["window"].get<std::vector<std::size_t>>();
          require(w.size() == 2, "manifest: window must be [start, end]");
          e.window = FrameWindow{w[0], w[1]};
        }
        if (gt.contains("segments")) e.corrupted_segments = gt["segments"].get<std::vector<std::size_t>>();
      }
      require(ids.insert(e.sample_id).second, "manifest: duplicate sample_id '" + e.sample_id + "'");
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("manifest: ") + ex.what());
  }
  return m;
}

inline DatasetManifest read_manifest(const std::filesystem::path& path) {
  const std::string text = read_file_bytes(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError("manifest '" + path.string() + "': " + ex.what());
  }
  DatasetManifest m = manifest_from_json(j);
  m.base_dir = path.parent_path();
  return m;
}

inline void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  write_file_bytes(path, to_json(m).dump(2) + "\n");
}

/// Referential integrity: every file exists and parses, shapes agree,
/// ground truth lies inside the sample. Throws on the first problem.
inline void validate_manifest(const DatasetManifest& m) {
  require(!m.labels.empty(), "manifest: no class labels");
  for (const auto& e : m.entries) {
    m.class_of(e);
    const Spectrogram s = m.load_spectrogram(e);
    const std::size_t T = s.frames();
    if (!e.posteriorgram.empty()) {
      const Posteriorgram p = m.load_posteriorgram(e);
      require(m.vocab.empty() || p.data.rows() == m.vocab.size(),
              "manifest: posteriorgram of '" + e.sample_id + "' does not match vocabulary size");
    }
    if (e.window)
      require(e.window->start < e.window->end && e.window->end <= T,
              "manifest: window of '" + e.sample_id + "' lies outside the sample");
    if (!e.corrupted_segments.empty()) {
      require(!e.posteriorgram.empty(), "manifest: segment ground truth needs a posteriorgram");
      const auto seg = segment_posteriorgram(m.load_posteriorgram(e), T);
      for (std::size_t j : e.corrupted_segments)
        require(j < seg.size(), "manifest: corrupted segment index of '" + e.sample_id + "' out of range");
    }
  }
}

}  // namespace pdsm
