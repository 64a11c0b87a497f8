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

#include <gtest/gtest.h>

#include <vector>

#include "pdsm/alignment.hpp"
#include "pdsm/rng.hpp"

namespace pdsm {
namespace {

Posteriorgram ppg_from_columns(const std::vector<std::vector<double>>& cols) {
  Matrix m(cols.front().size(), cols.size());
  for (std::size_t t = 0; t < cols.size(); ++t)
    for (std::size_t i = 0; i < cols[t].size(); ++i) m(i, t) = cols[t][i];
  return {m, {}};
}

PhonemeSegmentation make_seg(std::vector<Segment> s, std::size_t T) { return {std::move(s), T}; }

FrameLabels random_labels(Rng& rng, std::size_t n, std::size_t vocab) {
  FrameLabels l(n);
  for (auto& v : l) v = static_cast<std::size_t>(rng.below(vocab));
  return l;
}

TEST(FrameArgmax, DirectExample) {
  const auto ppg = ppg_from_columns({{.1, .8, .1}, {.1, .8, .1}, {.5, .25, .25}, {.3, .3, .4}});
  EXPECT_EQ(frame_argmax(ppg), (FrameLabels{1, 1, 0, 2}));
}

TEST(FrameArgmax, TiesGoToLowestIndex) {
  const auto ppg = ppg_from_columns({{1.0 / 3, 1.0 / 3, 1.0 / 3}, {0.2, 0.4, 0.4}});
  EXPECT_EQ(frame_argmax(ppg), (FrameLabels{0, 1}));
}

TEST(FrameArgmax, InvariantUnderPositiveColumnScaling) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    Posteriorgram p{Matrix(5, 12), {}};
    for (double& v : p.data.values()) v = rng.uniform();
    Posteriorgram q = p;
    for (std::size_t t = 0; t < 12; ++t) {
      const double s = rng.uniform(0.01, 100.0);
      for (std::size_t i = 0; i < 5; ++i) q.data(i, t) *= s;
    }
    ASSERT_EQ(frame_argmax(p), frame_argmax(q));
  }
}

TEST(FrameArgmax, RejectsNegativeScores) {
  EXPECT_THROW(frame_argmax(ppg_from_columns({{0.5, -0.1}})), ValidationError);
}

TEST(SegmentsFromLabels, RunLengthExample) {
  const auto seg = segments_from_labels({0, 0, 2, 2, 2, 1});
  EXPECT_EQ(seg, make_seg({{0, 0, 2}, {2, 2, 5}, {1, 5, 6}}, 6));
}

TEST(SegmentsFromLabels, SingleFrame) {
  EXPECT_EQ(segments_from_labels({7}), make_seg({{7, 0, 1}}, 1));
}

TEST(SegmentsFromLabels, EmptyIsValidationError) {
  EXPECT_THROW(segments_from_labels({}), ValidationError);
}

TEST(SegmentsFromLabels, RoundTripFuzz) {
  Rng rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const FrameLabels l = random_labels(rng, 1 + rng.below(60), 1 + rng.below(5));
    const auto seg = segments_from_labels(l);
    ASSERT_NO_THROW(seg.validate());
    ASSERT_EQ(labels_from_segments(seg), l);
  }
}

TEST(Resample, IdentityWhenLengthUnchanged) {
  const auto seg = segments_from_labels({0, 0, 2, 2, 2, 1});
  EXPECT_EQ(resample_segmentation(seg, 6), seg);
}

TEST(Resample, ProportionalHalving) {
  const auto seg = make_seg({{0, 0, 3}, {1, 3, 6}}, 6);
  EXPECT_EQ(resample_segmentation(seg, 2), make_seg({{0, 0, 1}, {1, 1, 2}}, 2));
}

TEST(Resample, DropsCollapsedSpansAndMerges) {
  // Boundaries 0,4,5,10 over 10 frames map to 0,2,3,5 at T=5 with half-up
  // rounding (2.5 -> 3); at T=2 the middle span vanishes and its neighbours
  // share a phoneme, so they merge.
  const auto seg = make_seg({{0, 0, 4}, {1, 4, 5}, {0, 5, 10}}, 10);
  EXPECT_EQ(resample_segmentation(seg, 5), make_seg({{0, 0, 2}, {1, 2, 3}, {0, 3, 5}}, 5));
  EXPECT_EQ(resample_segmentation(seg, 2), make_seg({{0, 0, 2}}, 2));
}

TEST(Resample, PartitionAndOrderFuzz) {
  Rng rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    const auto seg = segments_from_labels(random_labels(rng, 100, 4));
    const auto out = resample_segmentation(seg, 237);
    ASSERT_NO_THROW(out.validate());
    ASSERT_EQ(out.total_frames, 237u);
    // Output phoneme sequence is the input sequence with some runs removed.
    std::size_t j = 0;
    for (const auto& s : out.segments) {
      while (j < seg.size() && seg[j].phoneme != s.phoneme) ++j;
      ASSERT_LT(j, seg.size());
      ++j;
    }
    const auto down = resample_segmentation(seg, 1 + rng.below(100));
    ASSERT_NO_THROW(down.validate());
  }
}

TEST(SegmentPosteriorgram, ResamplesOntoTargetLength) {
  const auto ppg = ppg_from_columns({{1, 0}, {1, 0}, {0, 1}, {0, 1}});
  EXPECT_EQ(segment_posteriorgram(ppg, 8), make_seg({{0, 0, 4}, {1, 4, 8}}, 8));
  EXPECT_EQ(segment_posteriorgram(ppg, 4), make_seg({{0, 0, 2}, {1, 2, 4}}, 4));
}

}  // namespace
}  // namespace pdsm
