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

// Synthetic ground-truth datasets.
//
// Speech-like utterance recipe (all draws from the per-sample stream, in
// this order):
//   T        ~ range(frames_min, frames_max)
//   segments : repeat until T is covered: duration ~ range(seg_min, seg_max),
//              phoneme ~ below(N) redrawn while equal to the previous one;
//              the final segment is truncated at T
//   f0       ~ uniform(2.5, 4.5) bins, vibrato phase ~ uniform(0, 2 pi)
//   per segment: loudness ~ uniform(0.7, 1.2)
//   per cell (row-major f, then t): one normal() for texture, one normal()
//              for the floor
// Cell value for phoneme p at bin f, frame t:
//   silence   : 0.02
//   voiced    : env_p(f) * loud * (0.35 + 0.65 * max_h exp(-(f - h f0(t))^2 / 1.28))
//   fricative : env_p(f) * loud * (0.85 + 0.15 |texture|)
//   plus 0.02 |floor| everywhere, where f0(t) = f0 (1 + 0.08 sin(2 pi t / 40 + phase)),
//   and the sum is scaled by kSynthLevel.
// Envelopes env_p come from the dataset-wide "templates" stream (see
// make_templates). Every value is rounded to float32 so in-memory samples
// equal what is written to disk.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pdsm/alignment.hpp"
#include "pdsm/manifest.hpp"
#include "pdsm/npy.hpp"
#include "pdsm/parallel.hpp"
#include "pdsm/rng.hpp"
#include "pdsm/types.hpp"

namespace pdsm {

/// Overall magnitude of generated spectrograms; puts typical values near 1.
inline constexpr double kSynthLevel = 4.0;

enum class CorruptionKind { additive_noise, spectral_tilt };

inline std::string_view to_string(CorruptionKind k) {
  return k == CorruptionKind::additive_noise ? "additive_noise" : "spectral_tilt";
}

inline CorruptionKind parse_corruption(std::string_view s) {
  if (s == "additive_noise") return CorruptionKind::additive_noise;
  if (s == "spectral_tilt") return CorruptionKind::spectral_tilt;
  throw ValidationError("unknown corruption kind '" + std::string(s) + "'");
}

struct SynthConfig {
  std::size_t n_train = 2000;
  std::size_t n_test = 500;
  std::size_t bins = 64;
  std::size_t frames_min = 96, frames_max = 160;
  std::size_t vocab_size = 12;
  std::size_t seg_min = 4, seg_max = 20;
  double window_frac_min = 0.1, window_frac_max = 0.3;
  double snr_db = 0.0;
  std::size_t n_corrupt_segments = 2;
  double corruption_gain = 3.0;
  CorruptionKind corruption_kind = CorruptionKind::additive_noise;
  /// Draw corrupted segments among fricative-class phonemes first.
  bool corrupt_fricatives_first = true;
  std::uint64_t seed = 0;

  void validate() const {
    require(n_train + n_test > 0, "synth config: no samples requested");
    require(bins >= 4, "synth config: need at least 4 frequency bins");
    require(frames_min >= 4 && frames_min <= frames_max, "synth config: bad frame range");
    require(vocab_size >= 2, "synth config: vocabulary needs at least 2 phonemes");
    require(seg_min >= 1 && seg_min <= seg_max, "synth config: bad segment duration range");
    require(window_frac_min > 0 && window_frac_min <= window_frac_max && window_frac_max <= 1.0,
            "synth config: noise window fractions must satisfy 0 < min <= max <= 1");
    require(std::isfinite(snr_db), "synth config: snr must be finite");
    require(corruption_gain >= 0 && std::isfinite(corruption_gain), "synth config: gain must be nonnegative");
  }

  nlohmann::json to_json() const {
    return {{"n_train", n_train},
            {"n_test", n_test},
            {"bins", bins},
            {"frames", {frames_min, frames_max}},
            {"vocab_size", vocab_size},
            {"segment_frames", {seg_min, seg_max}},
            {"window_fraction", {window_frac_min, window_frac_max}},
            {"snr_db", snr_db},
            {"n_corrupt_segments", n_corrupt_segments},
            {"corruption_gain", corruption_gain},
            {"corruption_kind", to_string(corruption_kind)},
            {"corrupt_fricatives_first", corrupt_fricatives_first},
            {"seed", seed}};
  }
};

enum class PhonemeClass { silence, voiced, fricative };

/// Vocabulary: index 0 is silence "<>", the last max(1, N/4) entries are
/// fricatives, everything between is voiced.
inline std::vector<std::string> make_vocab(std::size_t n) {
  static const char* kVoiced[] = {"aa", "iy", "uw", "eh", "ah", "m", "n", "l", "r", "ow", "ey", "ae"};
  static const char* kFric[] = {"s", "sh", "f", "z", "th", "v"};
  const std::size_t n_fric = std::max<std::size_t>(1, n / 4);
  std::vector<std::string> v(n);
  v[0] = "<>";
  for (std::size_t i = 1; i < n; ++i) {
    if (i >= n - n_fric) {
      const std::size_t j = i - (n - n_fric);
      v[i] = j < std::size(kFric) ? kFric[j] : "fr" + std::to_string(j);
    } else {
      const std::size_t j = i - 1;
      v[i] = j < std::size(kVoiced) ? kVoiced[j] : "ph" + std::to_string(j);
    }
  }
  return v;
}

inline PhonemeClass phoneme_class(std::size_t p, std::size_t n) {
  if (p == 0) return PhonemeClass::silence;
  return p >= n - std::max<std::size_t>(1, n / 4) ? PhonemeClass::fricative : PhonemeClass::voiced;
}

/// Spectral envelope per phoneme (rows) over frequency bins (cols).
/// Voiced: three Gaussian formants, centres uniform in [0.08, 0.25],
/// [0.25, 0.5], [0.5, 0.7] of F, widths uniform(1.5, 4) bins, peak
/// amplitudes 1.0, 0.6, 0.3 each scaled by uniform(0.8, 1.2).
/// Fricative: a * logistic((f - c) / w) with c uniform in [0.55, 0.75] F,
/// w uniform(1.5, 3), a uniform(0.3, 0.6). Silence: zero.
inline Matrix make_templates(std::size_t vocab, std::size_t bins, std::uint64_t seed) {
  Rng rng = Rng(seed).split("templates");
  const double F = static_cast<double>(bins);
  Matrix env(vocab, bins, 0.0);
  for (std::size_t p = 0; p < vocab; ++p) {
    switch (phoneme_class(p, vocab)) {
      case PhonemeClass::silence:
        break;
      case PhonemeClass::voiced: {
        const double lo[3] = {0.08, 0.25, 0.5}, hi[3] = {0.25, 0.5, 0.7}, amp[3] = {1.0, 0.6, 0.3};
        for (int k = 0; k < 3; ++k) {
          const double c = rng.uniform(lo[k], hi[k]) * F;
          const double w = rng.uniform(1.5, 4.0);
          const double a = amp[k] * rng.uniform(0.8, 1.2);
          for (std::size_t f = 0; f < bins; ++f) {
            const double d = (static_cast<double>(f) - c) / w;
            env(p, f) += a * std::exp(-0.5 * d * d);
          }
        }
        break;
      }
      case PhonemeClass::fricative: {
        const double c = rng.uniform(0.55, 0.75) * F;
        const double w = rng.uniform(1.5, 3.0);
        const double a = rng.uniform(0.3, 0.6);
        for (std::size_t f = 0; f < bins; ++f)
          env(p, f) = a / (1.0 + std::exp(-(static_cast<double>(f) - c) / w));
        break;
      }
    }
  }
  return env;
}

struct Utterance {
  Matrix spectrogram;
  PhonemeSegmentation segmentation;
};

inline void round_to_f32(Matrix& m) {
  for (double& v : m.values()) v = static_cast<double>(static_cast<float>(v));
}

inline PhonemeSegmentation random_segmentation(Rng& rng, std::size_t frames, std::size_t vocab,
                                               std::size_t seg_min, std::size_t seg_max) {
  PhonemeSegmentation seg;
  seg.total_frames = frames;
  std::size_t t = 0;
  std::size_t prev = vocab;  // none
  while (t < frames) {
    const auto dur = static_cast<std::size_t>(rng.range(static_cast<long long>(seg_min), static_cast<long long>(seg_max)));
    std::size_t p;
    do {
      p = static_cast<std::size_t>(rng.below(vocab));
    } while (p == prev);
    const std::size_t end = std::min(frames, t + dur);
    seg.segments.push_back({p, t, end});
    prev = p;
    t = end;
  }
  return seg;
}

inline Utterance make_utterance(Rng& rng, const SynthConfig& cfg, const Matrix& templates) {
  Utterance u;
  const auto T = static_cast<std::size_t>(
      rng.range(static_cast<long long>(cfg.frames_min), static_cast<long long>(cfg.frames_max)));
  u.segmentation = random_segmentation(rng, T, cfg.vocab_size, cfg.seg_min, cfg.seg_max);
  const double f0 = rng.uniform(2.5, 4.5);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  std::vector<double> loud(u.segmentation.size());
  for (double& l : loud) l = rng.uniform(0.7, 1.2);

  const FrameLabels labels = labels_from_segments(u.segmentation);
  std::vector<double> frame_loud(T);
  for (std::size_t i = 0; i < u.segmentation.size(); ++i)
    for (std::size_t t = u.segmentation[i].start; t < u.segmentation[i].end; ++t) frame_loud[t] = loud[i];

  u.spectrogram = Matrix(cfg.bins, T, 0.0);
  for (std::size_t f = 0; f < cfg.bins; ++f) {
    const double fb = static_cast<double>(f);
    for (std::size_t t = 0; t < T; ++t) {
      const double texture = rng.normal();
      const double floor = rng.normal();
      const std::size_t p = labels[t];
      double v = 0.0;
      switch (phoneme_class(p, cfg.vocab_size)) {
        case PhonemeClass::silence:
          v = 0.02;
          break;
        case PhonemeClass::voiced: {
          const double ft = f0 * (1.0 + 0.08 * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 40.0 + phase));
          const double h = std::max(1.0, std::round(fb / ft));
          const double d = fb - h * ft;
          v = templates(p, f) * frame_loud[t] * (0.35 + 0.65 * std::exp(-d * d / 1.28));
          break;
        }
        case PhonemeClass::fricative:
          v = templates(p, f) * frame_loud[t] * (0.85 + 0.15 * std::fabs(texture));
          break;
      }
      u.spectrogram(f, t) = kSynthLevel * (v + 0.02 * std::fabs(floor));
    }
  }
  round_to_f32(u.spectrogram);
  return u;
}

/// One-hot plus uniform(0, 0.4) noise on every cell (row-major draws); the
/// argmax reproduces the segmentation exactly. Rounded to float32.
inline Matrix make_posteriorgram(Rng& rng, const PhonemeSegmentation& seg, std::size_t vocab) {
  const FrameLabels labels = labels_from_segments(seg);
  Matrix ppg(vocab, seg.total_frames, 0.0);
  for (std::size_t i = 0; i < vocab; ++i)
    for (std::size_t t = 0; t < seg.total_frames; ++t)
      ppg(i, t) = rng.uniform(0.0, 0.4) + (labels[t] == i ? 1.0 : 0.0);
  round_to_f32(ppg);
  return ppg;
}

struct SynthSample {
  ManifestEntry entry;
  Matrix spectrogram;
  Matrix posteriorgram;  // empty when shared with entry.source
  PhonemeSegmentation segmentation;
};

struct SynthDataset {
  DatasetManifest manifest;
  std::vector<SynthSample> samples;

  std::vector<const SynthSample*> split(std::string_view name) const {
    std::vector<const SynthSample*> out;
    for (const auto& s : samples)
      if (s.entry.split == name) out.push_back(&s);
    return out;
  }
};

namespace synth_detail {

inline std::string sample_name(std::string_view split, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%05zu", std::string(split).c_str(), i);
  return buf;
}

}  // namespace synth_detail

/// Uniform window of round(frac * T) frames (at least 1), frac drawn from
/// the configured range, start uniform over the admissible positions.
inline FrameWindow draw_window(Rng& rng, std::size_t T, double frac_min, double frac_max) {
  const double frac = rng.uniform(frac_min, frac_max);
  std::size_t len = static_cast<std::size_t>(std::llround(frac * static_cast<double>(T)));
  len = std::clamp<std::size_t>(len, 1, T);
  const std::size_t start = static_cast<std::size_t>(rng.below(T - len + 1));
  return {start, start + len};
}

/// Broadband block over the window: each cell gains A * sqrt(E), E a unit
/// exponential draw (sqrt(-ln(1 - u))), so the added magnitude is Rayleigh
/// with mean power A^2 = (mean clean power of the utterance) * 10^(-snr/10).
inline void add_noise_block(Rng& rng, Matrix& x, FrameWindow w, double snr_db) {
  double power = 0.0;
  for (double v : x.values()) power += v * v;
  power /= static_cast<double>(x.size());
  const double amp = std::sqrt(power * std::pow(10.0, -snr_db / 10.0));
  for (std::size_t f = 0; f < x.rows(); ++f)
    for (std::size_t t = w.start; t < w.end; ++t) x(f, t) += amp * std::sqrt(-std::log1p(-rng.uniform()));
  round_to_f32(x);
}

/// Time-limited noise detection. Sample i of a split is noisy iff i is odd;
/// every sample is an independent utterance from stream split(split).split(i).
inline SynthDataset gen_noise_dataset(const SynthConfig& cfg, unsigned threads = 1) {
  cfg.validate();
  SynthDataset ds;
  ds.manifest.task = "noise";
  ds.manifest.seed = cfg.seed;
  ds.manifest.generator = cfg.to_json();
  ds.manifest.labels = {"clean", "noisy"};
  ds.manifest.vocab = make_vocab(cfg.vocab_size);
  const Matrix templates = make_templates(cfg.vocab_size, cfg.bins, cfg.seed);
  const Rng root(cfg.seed);

  for (auto [split, count] : {std::pair<std::string_view, std::size_t>{"train", cfg.n_train}, {"test", cfg.n_test}}) {
    std::vector<SynthSample> out(count);
    parallel_for(count, threads, [&](std::size_t i) {
      Rng rng = root.split(split).split(i);
      Utterance u = make_utterance(rng, cfg, templates);
      SynthSample s;
      s.entry.sample_id = synth_detail::sample_name(split, i);
      s.entry.split = std::string(split);
      s.entry.label = i % 2 ? "noisy" : "clean";
      s.entry.spectrogram = "spec/" + s.entry.sample_id + ".npy";
      s.entry.posteriorgram = "ppg/" + s.entry.sample_id + ".npy";
      s.posteriorgram = make_posteriorgram(rng, u.segmentation, cfg.vocab_size);
      if (i % 2) {
        const FrameWindow w = draw_window(rng, u.spectrogram.cols(), cfg.window_frac_min, cfg.window_frac_max);
        add_noise_block(rng, u.spectrogram, w, cfg.snr_db);
        s.entry.window = w;
      }
      s.spectrogram = std::move(u.spectrogram);
      s.segmentation = std::move(u.segmentation);
      out[i] = std::move(s);
    });
    for (auto& s : out) ds.samples.push_back(std::move(s));
  }
  for (const auto& s : ds.samples) ds.manifest.entries.push_back(s.entry);
  return ds;
}

/// Indices of segments to corrupt: fricative segments first (in random
/// order) when enabled, then the rest, truncated to `count`; returned sorted.
inline std::vector<std::size_t> choose_corrupted(Rng& rng, const PhonemeSegmentation& seg,
                                                 std::size_t vocab, std::size_t count,
                                                 bool fricatives_first) {
  std::vector<std::size_t> primary, rest;
  for (std::size_t i = 0; i < seg.size(); ++i) {
    const bool fric = phoneme_class(seg[i].phoneme, vocab) == PhonemeClass::fricative;
    (fricatives_first && fric ? primary : rest).push_back(i);
  }
  rng.shuffle(primary);
  rng.shuffle(rest);
  primary.insert(primary.end(), rest.begin(), rest.end());
  primary.resize(std::min(count, primary.size()));
  std::sort(primary.begin(), primary.end());
  return primary;
}

/// In-place corruption of one segment. additive_noise adds
/// kSynthLevel * gain * 0.3 * |normal()| to every cell in the upper half of
/// the band;
/// spectral_tilt multiplies bin f by 1 + gain * 0.25 * f / (F - 1).
inline void corrupt_segment(Rng& rng, Matrix& x, const Segment& s, CorruptionKind kind, double gain) {
  const std::size_t F = x.rows();
  for (std::size_t f = 0; f < F; ++f) {
    for (std::size_t t = s.start; t < s.end; ++t) {
      if (kind == CorruptionKind::additive_noise) {
        if (f < F / 2) continue;
        x(f, t) += kSynthLevel * gain * 0.3 * std::fabs(rng.normal());
      } else {
        x(f, t) *= 1.0 + gain * 0.25 * static_cast<double>(f) / static_cast<double>(F - 1);
      }
    }
  }
}

/// Fake-phoneme corruption task. Each split of n samples holds ceil(n/2)
/// real utterances (even indices) and, for each odd index i, a fake copy of
/// real sample i - 1 with n_corrupt_segments segments corrupted. The fake
/// shares the real sample's posteriorgram file.
inline SynthDataset gen_fake_phoneme_dataset(const SynthConfig& cfg, unsigned threads = 1,
                                             std::vector<std::string>* warnings = nullptr) {
  cfg.validate();
  SynthDataset ds;
  ds.manifest.task = "fakephoneme";
  ds.manifest.seed = cfg.seed;
  ds.manifest.generator = cfg.to_json();
  ds.manifest.labels = {"real", "fake"};
  ds.manifest.vocab = make_vocab(cfg.vocab_size);
  const Matrix templates = make_templates(cfg.vocab_size, cfg.bins, cfg.seed);
  const Rng root(cfg.seed);

  for (auto [split, count] : {std::pair<std::string_view, std::size_t>{"train", cfg.n_train}, {"test", cfg.n_test}}) {
    const std::size_t pairs = (count + 1) / 2;
    std::vector<SynthSample> out(count);
    std::vector<std::string> clamp_notes(pairs);
    parallel_for(pairs, threads, [&](std::size_t pi) {
      const std::size_t ri = 2 * pi;
      Rng rng = root.split(split).split(ri);
      Utterance u = make_utterance(rng, cfg, templates);
      SynthSample real;
      real.entry.sample_id = synth_detail::sample_name(split, ri);
      real.entry.split = std::string(split);
      real.entry.label = "real";
      real.entry.spectrogram = "spec/" + real.entry.sample_id + ".npy";
      real.entry.posteriorgram = "ppg/" + real.entry.sample_id + ".npy";
      real.posteriorgram = make_posteriorgram(rng, u.segmentation, cfg.vocab_size);
      real.spectrogram = u.spectrogram;
      real.segmentation = u.segmentation;

      if (ri + 1 < count) {
        Rng crng = root.split(split).split(ri + 1);
        SynthSample fake;
        fake.entry.sample_id = synth_detail::sample_name(split, ri + 1);
        fake.entry.split = std::string(split);
        fake.entry.label = "fake";
        fake.entry.spectrogram = "spec/" + fake.entry.sample_id + ".npy";
        fake.entry.posteriorgram = real.entry.posteriorgram;
        fake.entry.source = real.entry.sample_id;
        if (cfg.n_corrupt_segments > u.segmentation.size())
          clamp_notes[pi] = fake.entry.sample_id + ": only " + std::to_string(u.segmentation.size()) +
                            " segments, corrupting all of them";
        const auto picked = choose_corrupted(crng, u.segmentation, cfg.vocab_size,
                                             cfg.n_corrupt_segments, cfg.corrupt_fricatives_first);
        fake.spectrogram = u.spectrogram;
        for (std::size_t j : picked)
          corrupt_segment(crng, fake.spectrogram, u.segmentation[j], cfg.corruption_kind, cfg.corruption_gain);
        round_to_f32(fake.spectrogram);
        fake.entry.corrupted_segments = picked;
        fake.segmentation = u.segmentation;
        out[ri + 1] = std::move(fake);
      }
      out[ri] = std::move(real);
    });
    if (warnings)
      for (auto& n : clamp_notes)
        if (!n.empty()) warnings->push_back(std::move(n));
    for (auto& s : out) ds.samples.push_back(std::move(s));
  }
  for (const auto& s : ds.samples) ds.manifest.entries.push_back(s.entry);
  return ds;
}

/// Write spec/, ppg/ and manifest.json under `dir`.
inline void write_dataset(const SynthDataset& ds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "spec", ec);
  std::filesystem::create_directories(dir / "ppg", ec);
  if (ec) throw IoError("cannot create dataset directory '" + dir.string() + "': " + ec.message());
  for (const auto& s : ds.samples) {
    save_matrix(s.spectrogram, dir / s.entry.spectrogram, Precision::f32);
    if (!s.posteriorgram.empty()) save_matrix(s.posteriorgram, dir / s.entry.posteriorgram, Precision::f32);
  }
  write_manifest(ds.manifest, dir / "manifest.json");
}

}  // namespace pdsm
