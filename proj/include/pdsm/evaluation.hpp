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

// Faithfulness (drop in class probability after removing the masked part of
// the input), k sweeps against the random-phoneme baseline, global phoneme
// importance, per-sample rankings and localization scores.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "pdsm/discretize.hpp"
#include "pdsm/manifest.hpp"
#include "pdsm/model.hpp"
#include "pdsm/parallel.hpp"
#include "pdsm/types.hpp"

namespace pdsm {

/// f_c(X) - f_c(X * (1 - M)). M may be binary or continuous in [0, 1].
inline double faithfulness(const ToyClassifier& model, const Matrix& x, const Matrix& mask, std::size_t c) {
  require(c < kNumClasses, "faithfulness: class index out of range");
  require(x.same_shape(mask), "faithfulness: mask shape does not match input");
  for (double v : mask.values())
    require(v >= 0.0 && v <= 1.0, "faithfulness: mask entries must lie in [0, 1]");
  Matrix kept(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) kept.values()[i] = x.values()[i] * (1.0 - mask.values()[i]);
  return forward(model, x)[c] - forward(model, kept)[c];
}

/// |M| min-max scaled to [0, 1]; constant maps become all zeros.
inline Matrix normalize_continuous_map(const Matrix& m) {
  require(all_finite(m), "normalize_continuous_map: non-finite entries");
  Matrix out(m.rows(), m.cols(), 0.0);
  if (m.empty()) return out;
  double lo = std::fabs(m.values()[0]), hi = lo;
  for (double v : m.values()) {
    lo = std::min(lo, std::fabs(v));
    hi = std::max(hi, std::fabs(v));
  }
  if (!(hi > lo)) return out;
  const double span = hi - lo;
  for (std::size_t i = 0; i < m.size(); ++i) out.values()[i] = (std::fabs(m.values()[i]) - lo) / span;
  return out;
}

enum class Variant { pdsm, random, continuous };

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::pdsm: return "pdsm";
    case Variant::random: return "random";
    case Variant::continuous: return "continuous";
  }
  return "?";
}

inline Variant parse_variant(std::string_view s) {
  if (s == "pdsm") return Variant::pdsm;
  if (s == "random") return Variant::random;
  if (s == "continuous") return Variant::continuous;
  throw ValidationError("unknown report variant '" + std::string(s) + "'");
}

struct ReportRow {
  std::string sample_id;
  std::string method;
  std::size_t k = 0;
  Variant variant = Variant::pdsm;
  double ff = 0.0;
  double mask_fraction = 0.0;
};

struct FaithfulnessReport {
  std::vector<ReportRow> rows;
  nlohmann::json metadata = nlohmann::json::object();

  /// Mean FF per (method, k, variant), summed in row order.
  std::map<std::tuple<std::string, std::size_t, Variant>, double> mean_ff() const {
    std::map<std::tuple<std::string, std::size_t, Variant>, std::pair<double, std::size_t>> acc;
    for (const auto& r : rows) {
      auto& a = acc[{r.method, r.k, r.variant}];
      a.first += r.ff;
      ++a.second;
    }
    std::map<std::tuple<std::string, std::size_t, Variant>, double> out;
    for (const auto& [key, v] : acc) out[key] = v.first / static_cast<double>(v.second);
    return out;
  }
};

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline constexpr const char* kReportCsvHeader = "sample_id,method,k,variant,ff,mask_fraction";

inline std::string report_csv(const FaithfulnessReport& rep) {
  std::string out = std::string(kReportCsvHeader) + "\n";
  for (const auto& r : rep.rows) {
    out += r.sample_id + "," + r.method + "," + std::to_string(r.k) + "," + std::string(to_string(r.variant)) +
           "," + format_real(r.ff) + "," + format_real(r.mask_fraction) + "\n";
  }
  return out;
}

inline FaithfulnessReport parse_report_csv(const std::string& text) {
  FaithfulnessReport rep;
  std::istringstream in(text);
  std::string line;
  require(std::getline(in, line) && line == kReportCsvHeader, "report csv: missing or wrong header row");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cols.push_back(cell);
    require(cols.size() == 6, "report csv: line " + std::to_string(lineno) + " does not have 6 columns");
    ReportRow r;
    r.sample_id = cols[0];
    r.method = cols[1];
    try {
      r.k = std::stoul(cols[2]);
      r.ff = std::stod(cols[4]);
      r.mask_fraction = std::stod(cols[5]);
    } catch (const std::exception&) {
      throw ValidationError("report csv: unparsable number on line " + std::to_string(lineno));
    }
    r.variant = parse_variant(cols[3]);
    rep.rows.push_back(std::move(r));
  }
  return rep;
}

/// Everything sweep_k needs for one utterance.
struct EvalSample {
  std::string sample_id;
  const Matrix* input = nullptr;
  PhonemeSegmentation segmentation;
  std::map<std::string, Matrix> maps;  // method name -> saliency map
};

struct SweepConfig {
  PdsmConfig pdsm = preset("fs2");
  std::vector<std::size_t> k_values;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::size_t target_class = 1;
  std::vector<std::string> vocab;
};

/// Seed of the random-phoneme mask for (sample, k, base seed).
inline std::uint64_t random_mask_seed(std::uint64_t base, std::string_view sample_id, std::size_t k) {
  return Rng::mix(Rng::mix(base, fnv1a(sample_id)), k);
}

/// For every sample, method and k: PDSM FF, random-phoneme FF averaged over
/// seeds, and continuous-map FF. Rows ordered by sample_id, then method name,
/// then k, then variant.
inline FaithfulnessReport sweep_k(const ToyClassifier& model, std::vector<const EvalSample*> samples,
                                  const SweepConfig& cfg, unsigned threads = 1) {
  require(!cfg.k_values.empty(), "sweep_k: empty k range");
  require(!cfg.seeds.empty(), "sweep_k: need at least one random-baseline seed");
  std::sort(samples.begin(), samples.end(),
            [](const EvalSample* a, const EvalSample* b) { return a->sample_id < b->sample_id; });
  std::vector<std::vector<ReportRow>> per_sample(samples.size());

  parallel_for(samples.size(), threads, [&](std::size_t si) {
    const EvalSample& s = *samples[si];
    const Matrix& x = *s.input;
    require(s.segmentation.total_frames == x.cols(), "sweep_k: segmentation of '" + s.sample_id + "' does not match input");
    const std::size_t c = cfg.target_class;
    const double base = forward(model, x)[c];
    auto ff_of = [&](const Matrix& mask) {
      Matrix kept(x.rows(), x.cols());
      for (std::size_t i = 0; i < x.size(); ++i) kept.values()[i] = x.values()[i] * (1.0 - mask.values()[i]);
      return base - forward(model, kept)[c];
    };
    std::vector<std::pair<double, double>> random_ff(cfg.k_values.size());
    for (std::size_t ki = 0; ki < cfg.k_values.size(); ++ki) {
      double ff = 0.0, frac = 0.0;
      for (std::uint64_t seed : cfg.seeds) {
        const auto mask = random_phoneme_mask(s.segmentation, x.rows(), cfg.k_values[ki],
                                              random_mask_seed(seed, s.sample_id, cfg.k_values[ki]));
        ff += cfg.k_values[ki] == 0 ? 0.0 : ff_of(mask.data);
        frac += mask.fraction();
      }
      random_ff[ki] = {ff / static_cast<double>(cfg.seeds.size()), frac / static_cast<double>(cfg.seeds.size())};
    }
    auto& rows = per_sample[si];
    for (const auto& [method, map] : s.maps) {
      require(map.same_shape(x), "sweep_k: map for '" + s.sample_id + "' has wrong shape");
      const Matrix cont = normalize_continuous_map(map);
      const double cont_ff = ff_of(cont);
      double cont_frac = 0.0;
      for (double v : cont.values()) cont_frac += v;
      cont_frac /= static_cast<double>(cont.size());
      const Matrix pre = preprocess(map, cfg.pdsm);
      const auto order = rank_segments(pre, s.segmentation, cfg.vocab, cfg.pdsm);
      for (std::size_t ki = 0; ki < cfg.k_values.size(); ++ki) {
        const std::size_t k = cfg.k_values[ki];
        std::vector<std::size_t> sel(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(k, order.size())));
        const auto mask = build_mask(s.segmentation, std::move(sel), x.rows(), k);
        const double ff = k == 0 ? 0.0 : ff_of(mask.data);
        rows.push_back({s.sample_id, method, k, Variant::pdsm, ff, mask.fraction()});
        rows.push_back({s.sample_id, method, k, Variant::random, random_ff[ki].first, random_ff[ki].second});
        rows.push_back({s.sample_id, method, k, Variant::continuous, cont_ff, cont_frac});
      }
    }
  });

  FaithfulnessReport rep;
  for (auto& rows : per_sample)
    for (auto& r : rows) rep.rows.push_back(std::move(r));
  rep.metadata = {{"model_hash", model.hash()},
                  {"target_class", cfg.target_class},
                  {"k_values", cfg.k_values},
                  {"seeds", cfg.seeds},
                  {"pdsm", {{"use_abs", cfg.pdsm.use_abs},
                            {"q", cfg.pdsm.q},
                            {"pool", to_string(cfg.pdsm.pool)},
                            {"exclude_silence", cfg.pdsm.exclude_silence}}}};
  return rep;
}

struct CurvePoint {
  std::string method;
  Variant variant;
  double bin_lo;
  double bin_hi;
  double mean_ff;
  std::size_t count;
};

inline constexpr double kFractionBin = 0.05;

/// Rows grouped by (method, variant, fraction bin of width 0.05); a fraction
/// of exactly 1 falls in the last bin [0.95, 1). Empty bins are omitted.
inline std::vector<CurvePoint> length_normalized_curve(const FaithfulnessReport& rep) {
  constexpr std::size_t kBins = 20;
  std::map<std::tuple<std::string, Variant, std::size_t>, std::pair<double, std::size_t>> acc;
  for (const auto& r : rep.rows) {
    auto bin = static_cast<std::size_t>(std::floor(r.mask_fraction / kFractionBin));
    bin = std::min(bin, kBins - 1);
    auto& a = acc[{r.method, r.variant, bin}];
    a.first += r.ff;
    ++a.second;
  }
  std::vector<CurvePoint> out;
  for (const auto& [key, v] : acc) {
    const auto& [method, variant, bin] = key;
    out.push_back({method, variant, static_cast<double>(bin) * kFractionBin,
                   static_cast<double>(bin + 1) * kFractionBin, v.first / static_cast<double>(v.second), v.second});
  }
  return out;
}

inline std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::string out = "method,variant,bin_lo,bin_hi,mean_ff,count\n";
  for (const auto& p : curve)
    out += p.method + "," + std::string(to_string(p.variant)) + "," + format_real(p.bin_lo) + "," +
           format_real(p.bin_hi) + "," + format_real(p.mean_ff) + "," + std::to_string(p.count) + "\n";
  return out;
}

/// Table-1 style summary: per method, mean FF of each variant over the
/// report's rows with k >= 1 (or only k == only_k when set).
inline nlohmann::json table_summary(const FaithfulnessReport& rep, std::optional<std::size_t> only_k = {}) {
  std::map<std::string, std::map<Variant, std::pair<double, std::size_t>>> acc;
  for (const auto& r : rep.rows) {
    if (r.k == 0 || (only_k && r.k != *only_k)) continue;
    auto& a = acc[r.method][r.variant];
    a.first += r.ff;
    ++a.second;
  }
  nlohmann::json methods = nlohmann::json::object();
  for (const auto& [method, vars] : acc) {
    nlohmann::json m = nlohmann::json::object();
    for (const auto& [v, a] : vars) m[std::string(to_string(v))] = a.first / static_cast<double>(a.second);
    methods[method] = m;
  }
  nlohmann::json j{{"methods", methods}, {"metadata", rep.metadata}};
  j["k"] = only_k ? nlohmann::json(*only_k) : nlohmann::json("all k >= 1");
  return j;
}

struct ImportanceRow {
  std::string label;
  double total_energy = 0.0;
  std::size_t total_frames = 0;
  double normalized_importance = 0.0;
};

using ImportanceTable = std::vector<ImportanceRow>;

struct ImportanceItem {
  const Matrix* map;
  const PhonemeSegmentation* segmentation;
};

/// Per phoneme label: total sum-pooled energy of the preprocessed maps
/// (raw maps when `raw`) over all items, divided by the total number of
/// frames the label occupies. Labels never observed are left out. Sorted
/// by descending importance, ties by vocabulary index.
inline ImportanceTable global_importance(const std::vector<ImportanceItem>& items,
                                         const std::vector<std::string>& vocab, const PdsmConfig& cfg,
                                         bool raw = false) {
  std::vector<double> energy(vocab.size(), 0.0);
  std::vector<std::size_t> frames(vocab.size(), 0);
  for (const auto& it : items) {
    const Matrix pre = raw ? *it.map : preprocess(*it.map, cfg);
    const auto e = phoneme_energies(pre, *it.segmentation, Pool::sum);
    for (std::size_t i = 0; i < e.size(); ++i) {
      const auto& s = (*it.segmentation)[i];
      require(s.phoneme < vocab.size(), "global_importance: phoneme index outside vocabulary");
      energy[s.phoneme] += e[i];
      frames[s.phoneme] += s.length();
    }
  }
  ImportanceTable table;
  std::vector<std::size_t> idx;
  for (std::size_t p = 0; p < vocab.size(); ++p)
    if (frames[p] > 0) idx.push_back(p);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return energy[a] / static_cast<double>(frames[a]) > energy[b] / static_cast<double>(frames[b]);
  });
  for (std::size_t p : idx)
    table.push_back({vocab[p], energy[p], frames[p], energy[p] / static_cast<double>(frames[p])});
  return table;
}

inline std::string importance_csv(const ImportanceTable& t) {
  std::string out = "rank,label,total_energy,total_frames,normalized_importance\n";
  for (std::size_t i = 0; i < t.size(); ++i)
    out += std::to_string(i) + "," + t[i].label + "," + format_real(t[i].total_energy) + "," +
           std::to_string(t[i].total_frames) + "," + format_real(t[i].normalized_importance) + "\n";
  return out;
}

struct RankedPhoneme {
  std::size_t rank;
  std::string label;
  std::size_t start, end;
  double energy;
};

/// Top `top_m` segments by pooled energy (same ordering as PDSM selection).
inline std::vector<RankedPhoneme> rank_phonemes(const Matrix& map, const Posteriorgram& ppg,
                                                const PdsmConfig& cfg, std::size_t top_m) {
  const PhonemeSegmentation seg = segment_posteriorgram(ppg, map.cols());
  const Matrix pre = preprocess(map, cfg);
  const auto energies = phoneme_energies(pre, seg, cfg.pool);
  const auto order = rank_segments(pre, seg, ppg.vocab, cfg);
  std::vector<RankedPhoneme> out;
  for (std::size_t r = 0; r < std::min(top_m, order.size()); ++r) {
    const auto& s = seg[order[r]];
    const std::string label = s.phoneme < ppg.vocab.size() ? ppg.vocab[s.phoneme] : std::to_string(s.phoneme);
    out.push_back({r, label, s.start, s.end, energies[order[r]]});
  }
  return out;
}

struct Localization {
  double recall = 0.0;
  double precision = 0.0;
  double energy_fraction = 0.0;
};

/// Overlap of a column mask (or any map; a column is "on" when it carries
/// nonzero mass) with a ground-truth frame window. energy_fraction is the
/// share of sum |M| inside the window.
inline Localization localization_score(const Matrix& map, FrameWindow window) {
  require(window.end > window.start, "localization_score: empty window");
  require(window.end <= map.cols(), "localization_score: window exceeds map length");
  std::size_t on = 0, on_inside = 0;
  double mass = 0.0, mass_inside = 0.0;
  for (std::size_t t = 0; t < map.cols(); ++t) {
    double col = 0.0;
    for (std::size_t f = 0; f < map.rows(); ++f) col += std::fabs(map(f, t));
    const bool inside = t >= window.start && t < window.end;
    mass += col;
    if (inside) mass_inside += col;
    if (col > 0) {
      ++on;
      if (inside) ++on_inside;
    }
  }
  Localization l;
  l.recall = static_cast<double>(on_inside) / static_cast<double>(window.length());
  l.precision = on ? static_cast<double>(on_inside) / static_cast<double>(on) : 0.0;
  l.energy_fraction = mass > 0 ? mass_inside / mass : 0.0;
  return l;
}

inline Localization localization_score(const DiscretizedMask& mask, FrameWindow window) {
  return localization_score(mask.data, window);
}

/// Share of corrupted segments that the selection recovered.
inline double segment_recall(const std::vector<std::size_t>& selected, const std::vector<std::size_t>& truth) {
  if (truth.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t j : truth) hit += std::count(selected.begin(), selected.end(), j) ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

}  // namespace pdsm
