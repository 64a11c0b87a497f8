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

// Phoneme discretization of saliency maps: preprocess the map, pool its
// energy inside each phoneme span, keep the k strongest spans as a binary
// column mask.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pdsm/alignment.hpp"
#include "pdsm/rng.hpp"
#include "pdsm/types.hpp"

namespace pdsm {

enum class ThresholdMode { none, absolute, quantile };
/// `max` is an ablation extension beyond mean/sum.
enum class Pool { mean, sum, max };

struct PdsmConfig {
  bool use_abs = false;
  ThresholdMode threshold_mode = ThresholdMode::quantile;
  double tau = 0.0;  // absolute mode
  double q = 0.8;    // quantile mode, in [0, 1]
  Pool pool = Pool::mean;
  std::size_t k = 1;
  bool exclude_silence = false;
  std::string silence_label = "<>";

  void validate() const {
    require(q >= 0.0 && q <= 1.0, "pdsm config: quantile q must lie in [0, 1]");
    require(std::isfinite(tau), "pdsm config: threshold must be finite");
  }
};

/// Named presets. "tt2": threshold without abs, mean pool. "fs2": abs then
/// threshold, sum pool. Both use the 0.8 quantile.
inline PdsmConfig preset(std::string_view name) {
  PdsmConfig c;
  if (name == "tt2") {
    c.use_abs = false;
    c.pool = Pool::mean;
  } else if (name == "fs2") {
    c.use_abs = true;
    c.pool = Pool::sum;
  } else {
    throw ValidationError("unknown preset '" + std::string(name) + "' (expected tt2 or fs2)");
  }
  return c;
}

inline std::string_view to_string(Pool p) {
  switch (p) {
    case Pool::mean: return "mean";
    case Pool::sum: return "sum";
    case Pool::max: return "max";
  }
  return "?";
}

inline Pool parse_pool(std::string_view s) {
  if (s == "mean") return Pool::mean;
  if (s == "sum") return Pool::sum;
  if (s == "max") return Pool::max;
  throw ValidationError("unknown pool '" + std::string(s) + "'");
}

/// Value below which entries are zeroed in quantile mode: the element at
/// sorted index ceil(q * n); q * n within 1e-9 of an integer counts as that
/// integer. Returns nullopt when every entry is to be zeroed (index == n).
inline std::optional<double> quantile_cutoff(std::span<const double> values, double q) {
  const std::size_t n = values.size();
  const double scaled = q * static_cast<double>(n);
  const double nearest = std::round(scaled);
  const auto idx = static_cast<std::size_t>(
      std::fabs(scaled - nearest) < 1e-9 ? nearest : std::ceil(scaled));
  if (idx >= n) return std::nullopt;
  std::vector<double> tmp(values.begin(), values.end());
  std::nth_element(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(idx), tmp.end());
  return tmp[idx];
}

/// abs (optional) then threshold; entries below the cutoff become 0.
inline Matrix preprocess(const Matrix& m, const PdsmConfig& cfg) {
  cfg.validate();
  require(all_finite(m), "preprocess: saliency map has non-finite entries");
  Matrix out = m;
  auto vals = out.values();
  if (cfg.use_abs)
    for (double& v : vals) v = std::fabs(v);
  switch (cfg.threshold_mode) {
    case ThresholdMode::none:
      break;
    case ThresholdMode::absolute:
      for (double& v : vals)
        if (v < cfg.tau) v = 0.0;
      break;
    case ThresholdMode::quantile: {
      const auto cut = quantile_cutoff(vals, cfg.q);
      for (double& v : vals)
        if (!cut || v < *cut) v = 0.0;
      break;
    }
  }
  return out;
}

using PhonemeEnergies = std::vector<double>;

inline PhonemeEnergies phoneme_energies(const Matrix& pre, const PhonemeSegmentation& seg,
                                        Pool pool) {
  require(seg.total_frames == pre.cols(),
          "phoneme_energies: segmentation covers " + std::to_string(seg.total_frames) +
              " frames but map has " + std::to_string(pre.cols()));
  PhonemeEnergies e;
  e.reserve(seg.size());
  for (const auto& s : seg.segments) {
    double acc = pool == Pool::max ? -std::numeric_limits<double>::infinity() : 0.0;
    for (std::size_t f = 0; f < pre.rows(); ++f) {
      const auto row = pre.row(f);
      for (std::size_t t = s.start; t < s.end; ++t)
        acc = pool == Pool::max ? std::max(acc, row[t]) : acc + row[t];
    }
    if (pool == Pool::mean) acc /= static_cast<double>(pre.rows() * s.length());
    e.push_back(acc);
  }
  return e;
}

/// Segment indices ordered by descending energy, ties by segment order
/// (equivalently by start frame).
inline std::vector<std::size_t> rank_by_energy(const PhonemeEnergies& energies) {
  std::vector<std::size_t> order(energies.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return energies[a] > energies[b]; });
  return order;
}

inline std::vector<std::size_t> select_top_k(const PhonemeEnergies& energies, std::size_t k) {
  auto order = rank_by_energy(energies);
  order.resize(std::min(k, order.size()));
  return order;
}

inline DiscretizedMask build_mask(const PhonemeSegmentation& seg, std::vector<std::size_t> selected,
                                  std::size_t bins, std::size_t k_requested) {
  DiscretizedMask mask;
  mask.data = Matrix(bins, seg.total_frames, 0.0);
  for (std::size_t j : selected) {
    require(j < seg.size(), "build_mask: selected index out of range");
    const auto& s = seg[j];
    for (std::size_t f = 0; f < bins; ++f) {
      auto row = mask.data.row(f);
      std::fill(row.begin() + static_cast<std::ptrdiff_t>(s.start),
                row.begin() + static_cast<std::ptrdiff_t>(s.end), 1.0);
    }
  }
  mask.selected = std::move(selected);
  mask.k_requested = k_requested;
  return mask;
}

inline DiscretizedMask build_mask(const PhonemeSegmentation& seg,
                                  const std::vector<std::size_t>& selected, std::size_t bins) {
  return build_mask(seg, selected, bins, selected.size());
}

namespace detail {

// Segments eligible for selection, honouring exclude_silence.
inline std::vector<std::size_t> eligible_segments(const PhonemeSegmentation& seg,
                                                  const std::vector<std::string>& vocab,
                                                  const PdsmConfig& cfg) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < seg.size(); ++i) {
    const bool silent = cfg.exclude_silence && seg[i].phoneme < vocab.size() &&
                        vocab[seg[i].phoneme] == cfg.silence_label;
    if (!silent) idx.push_back(i);
  }
  return idx;
}

}  // namespace detail

/// Ranking of eligible segments for a map already preprocessed and a given
/// segmentation. Used by discretize() and by per-sample ranking reports.
inline std::vector<std::size_t> rank_segments(const Matrix& pre, const PhonemeSegmentation& seg,
                                              const std::vector<std::string>& vocab,
                                              const PdsmConfig& cfg) {
  const PhonemeEnergies all = phoneme_energies(pre, seg, cfg.pool);
  if (!cfg.exclude_silence) return rank_by_energy(all);
  const auto keep = detail::eligible_segments(seg, vocab, cfg);
  PhonemeEnergies sub;
  for (std::size_t i : keep) sub.push_back(all[i]);
  std::vector<std::size_t> order;
  for (std::size_t r : rank_by_energy(sub)) order.push_back(keep[r]);
  return order;
}

/// Discretize a saliency map given an already computed segmentation.
inline DiscretizedMask discretize(const Matrix& saliency, const PhonemeSegmentation& seg,
                            const std::vector<std::string>& vocab, const PdsmConfig& cfg) {
  const Matrix pre = preprocess(saliency, cfg);
  auto order = rank_segments(pre, seg, vocab, cfg);
  order.resize(std::min(cfg.k, order.size()));
  return build_mask(seg, std::move(order), saliency.rows(), cfg.k);
}

/// Full pipeline: preprocess, argmax alignment, run-length segments, pooled
/// energies, top-k, mask. The posteriorgram is resampled onto the map's
/// frame count when they differ.
inline DiscretizedMask discretize(const Matrix& saliency, const Posteriorgram& ppg,
                            const PdsmConfig& cfg) {
  require(all_finite(saliency), "pdsm: saliency map has non-finite entries");
  const PhonemeSegmentation seg = segment_posteriorgram(ppg, saliency.cols());
  return discretize(saliency, seg, ppg.vocab, cfg);
}

/// Random-phoneme baseline: k segments drawn uniformly without replacement.
inline DiscretizedMask random_phoneme_mask(const PhonemeSegmentation& seg, std::size_t bins,
                                           std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  auto picked = rng.sample_without_replacement(seg.size(), k);
  return build_mask(seg, std::move(picked), bins, k);
}

}  // namespace pdsm
