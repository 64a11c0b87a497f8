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

#include <cmath>
#include <cstddef>
#include <vector>

#include "pdsm/types.hpp"

namespace pdsm {

/// Per-frame vocabulary index.
using FrameLabels = std::vector<std::size_t>;

/// Column-wise argmax of a posteriorgram; ties go to the lowest row.
inline FrameLabels frame_argmax(const Posteriorgram& ppg) {
  ppg.validate();
  const Matrix& m = ppg.data;
  FrameLabels labels(m.cols(), 0);
  for (std::size_t t = 0; t < m.cols(); ++t) {
    double best = m(0, t);
    for (std::size_t i = 1; i < m.rows(); ++i) {
      if (m(i, t) > best) {
        best = m(i, t);
        labels[t] = i;
      }
    }
  }
  return labels;
}

inline PhonemeSegmentation segments_from_labels(const FrameLabels& labels) {
  require(!labels.empty(), "segments_from_labels: empty label sequence");
  PhonemeSegmentation seg;
  seg.total_frames = labels.size();
  std::size_t start = 0;
  for (std::size_t t = 1; t <= labels.size(); ++t) {
    if (t == labels.size() || labels[t] != labels[start]) {
      seg.segments.push_back({labels[start], start, t});
      start = t;
    }
  }
  return seg;
}

/// Inverse of segments_from_labels.
inline FrameLabels labels_from_segments(const PhonemeSegmentation& seg) {
  FrameLabels labels(seg.total_frames, 0);
  for (const auto& s : seg.segments)
    for (std::size_t t = s.start; t < s.end; ++t) labels[t] = s.phoneme;
  return labels;
}

/// Map a segmentation onto a different frame count. Each boundary b becomes
/// floor(b * target / T' + 1/2) (computed exactly in integers); spans that
/// collapse to zero length are dropped and equal-phoneme neighbours merged.
inline PhonemeSegmentation resample_segmentation(const PhonemeSegmentation& seg,
                                                 std::size_t target_frames) {
  require(target_frames >= 1, "resample_segmentation: target frame count must be positive");
  seg.validate();
  const std::size_t src = seg.total_frames;
  auto map = [&](std::size_t b) { return (2 * b * target_frames + src) / (2 * src); };

  PhonemeSegmentation out;
  out.total_frames = target_frames;
  for (const auto& s : seg.segments) {
    const std::size_t a = map(s.start);
    const std::size_t e = map(s.end);
    if (e <= a) continue;
    if (!out.segments.empty() && out.segments.back().phoneme == s.phoneme) {
      out.segments.back().end = e;
    } else {
      out.segments.push_back({s.phoneme, a, e});
    }
  }
  return out;
}

/// Argmax alignment, run-length segmentation and (if the posteriorgram hop
/// differs from the saliency map's) resampling onto `target_frames`.
inline PhonemeSegmentation segment_posteriorgram(const Posteriorgram& ppg,
                                                 std::size_t target_frames) {
  PhonemeSegmentation seg = segments_from_labels(frame_argmax(ppg));
  if (seg.total_frames != target_frames) seg = resample_segmentation(seg, target_frames);
  return seg;
}

}  // namespace pdsm
