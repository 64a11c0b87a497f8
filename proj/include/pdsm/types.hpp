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

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "pdsm/error.hpp"
#include "pdsm/matrix.hpp"

namespace pdsm {

/// F x T nonnegative classifier input.
struct Spectrogram {
  Matrix data;
  std::string sample_id;

  std::size_t bins() const noexcept { return data.rows(); }
  std::size_t frames() const noexcept { return data.cols(); }

  void validate() const {
    require(data.rows() >= 1 && data.cols() >= 1, "spectrogram '" + sample_id + "': empty shape");
    for (double v : data.values())
      require(std::isfinite(v) && v >= 0.0,
              "spectrogram '" + sample_id + "': entries must be finite and nonnegative");
  }
};

enum class MethodId { gradient, grad_input, ig, gradshap, guided_bp, deeplift };

inline constexpr std::array<MethodId, 6> kAllMethods{MethodId::ig,       MethodId::gradshap,
                                                     MethodId::grad_input, MethodId::guided_bp,
                                                     MethodId::gradient, MethodId::deeplift};

constexpr std::string_view to_string(MethodId m) noexcept {
  switch (m) {
    case MethodId::gradient: return "gradient";
    case MethodId::grad_input: return "grad_input";
    case MethodId::ig: return "ig";
    case MethodId::gradshap: return "gradshap";
    case MethodId::guided_bp: return "guided_bp";
    case MethodId::deeplift: return "deeplift";
  }
  return "?";
}

inline MethodId parse_method(std::string_view s) {
  for (MethodId m : kAllMethods)
    if (to_string(m) == s) return m;
  throw ValidationError("unknown attribution method '" + std::string(s) + "'");
}

struct SaliencyMap {
  Matrix data;
  MethodId method = MethodId::gradient;
  int target_class = 1;
};

/// N x T' phoneme score matrix. Columns need not be normalized.
struct Posteriorgram {
  Matrix data;
  std::vector<std::string> vocab;

  void validate() const {
    require(data.rows() >= 1 && data.cols() >= 1, "posteriorgram: empty shape");
    require(vocab.empty() || vocab.size() == data.rows(),
            "posteriorgram: vocabulary size " + std::to_string(vocab.size()) +
                " does not match row count " + std::to_string(data.rows()));
    for (double v : data.values())
      require(std::isfinite(v) && v >= 0.0, "posteriorgram: entries must be finite and nonnegative");
  }
};

/// Half-open frame span [start, end) labelled with a vocabulary index.
struct Segment {
  std::size_t phoneme = 0;
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const noexcept { return end - start; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Run-length partition of [0, total_frames).
struct PhonemeSegmentation {
  std::vector<Segment> segments;
  std::size_t total_frames = 0;

  std::size_t size() const noexcept { return segments.size(); }
  const Segment& operator[](std::size_t i) const { return segments[i]; }

  void validate() const {
    require(!segments.empty(), "segmentation: no segments");
    require(segments.front().start == 0, "segmentation: first segment must start at frame 0");
    require(segments.back().end == total_frames, "segmentation: last segment must end at T");
    for (std::size_t i = 0; i < segments.size(); ++i) {
      require(segments[i].end > segments[i].start,
              "segmentation: segment " + std::to_string(i) + " is empty");
      if (i > 0) {
        require(segments[i].start == segments[i - 1].end,
                "segmentation: segments " + std::to_string(i - 1) + " and " + std::to_string(i) +
                    " do not abut");
        require(segments[i].phoneme != segments[i - 1].phoneme,
                "segmentation: consecutive segments share a phoneme");
      }
    }
  }

  friend bool operator==(const PhonemeSegmentation&, const PhonemeSegmentation&) = default;
};

/// Column-constant binary mask covering the union of selected segments.
struct DiscretizedMask {
  Matrix data;
  std::vector<std::size_t> selected;  // segment indices, in selection order
  std::size_t k_requested = 0;

  bool column_on(std::size_t t) const { return data.rows() > 0 && data(0, t) != 0.0; }

  std::size_t on_frames() const {
    std::size_t n = 0;
    for (std::size_t t = 0; t < data.cols(); ++t) n += column_on(t) ? 1 : 0;
    return n;
  }

  double fraction() const {
    return data.cols() ? static_cast<double>(on_frames()) / static_cast<double>(data.cols()) : 0.0;
  }
};

}  // namespace pdsm
