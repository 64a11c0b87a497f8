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

// Command-line front end: dataset generation, training, attribution,
// discretization and the evaluation reports. Every subcommand writes into
// --out-dir through a staging directory that is renamed into place only
// after the whole command succeeded.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <system_error>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pdsm/pdsm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pdsm::cli {
namespace {

constexpr const char* kVersion = "1.0.0";

struct Globals {
  std::uint64_t seed = 0;
  std::string out_dir;
  unsigned threads = default_threads();
};

/// Output directory under construction. Files go to a sibling staging
/// directory; commit() moves each top-level entry into the destination.
class Stage {
 public:
  explicit Stage(const fs::path& dest) : dest_(fs::absolute(dest).lexically_normal()) {
    if (dest_.filename().empty()) dest_ = dest_.parent_path();
    tmp_ = dest_.parent_path() / ("." + dest_.filename().string() + ".partial");
    std::error_code ec;
    fs::remove_all(tmp_, ec);
    fs::create_directories(tmp_, ec);
    if (ec) throw IoError("cannot create staging directory '" + tmp_.string() + "': " + ec.message());
  }
  Stage(const Stage&) = delete;
  Stage& operator=(const Stage&) = delete;
  ~Stage() {
    std::error_code ec;
    fs::remove_all(tmp_, ec);
  }

  fs::path path(const fs::path& rel) const {
    const fs::path p = tmp_ / rel;
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw IoError("cannot create '" + p.parent_path().string() + "': " + ec.message());
    return p;
  }

  void write(const fs::path& rel, std::string_view bytes) const { write_file_bytes(path(rel), bytes); }

  void commit() {
    std::error_code ec;
    fs::create_directories(dest_, ec);
    if (ec) throw IoError("cannot create output directory '" + dest_.string() + "': " + ec.message());
    for (const auto& entry : fs::directory_iterator(tmp_)) {
      const fs::path target = dest_ / entry.path().filename();
      fs::remove_all(target, ec);
      fs::rename(entry.path(), target, ec);
      if (ec) throw IoError("cannot move output into '" + target.string() + "': " + ec.message());
    }
  }

 private:
  fs::path dest_, tmp_;
};

json run_manifest(const std::string& command, const Globals& g, json config) {
  return {{"tool", "pdsm"},
          {"version", kVersion},
          {"command", command},
          {"seed", g.seed},
          {"config", std::move(config)},
          {"formats", {{"dataset", 1}, {"model", 1}, {"attributions", 1}}}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void warn(const std::string& msg) { std::cerr << "warning: " << msg << "\n"; }

DatasetManifest open_dataset(const std::string& where) {
  fs::path p(where);
  if (fs::is_directory(p)) p /= "manifest.json";
  return read_manifest(p);
}

PhonemeSegmentation segmentation_of(const DatasetManifest& m, const ManifestEntry& e, std::size_t frames) {
  return segment_posteriorgram(m.load_posteriorgram(e), frames);
}

std::uint64_t sample_seed(std::uint64_t seed, std::string_view id) { return Rng::mix(seed, fnv1a(id)); }

std::vector<MethodId> parse_methods(const std::vector<std::string>& names) {
  std::vector<MethodId> out;
  for (const auto& n : names) {
    if (n == "all") {
      for (MethodId m : kAllMethods)
        if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
      continue;
    }
    const MethodId m = parse_method(n);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  require(!out.empty(), "no attribution method selected");
  return out;
}

// ---- attribution directory ----

struct AttributionSet {
  fs::path dir;
  json index;
  std::vector<std::string> methods;
  std::vector<std::string> samples;

  fs::path map_path(const std::string& method, const std::string& id) const {
    return dir / "maps" / method / (id + ".npy");
  }
  Matrix load(const std::string& method, const std::string& id) const {
    require(std::find(methods.begin(), methods.end(), method) != methods.end(),
            "attribution set has no maps for method '" + method + "'");
    return load_matrix(map_path(method, id));
  }
};

AttributionSet open_attributions(const std::string& where) {
  AttributionSet a;
  a.dir = where;
  try {
    a.index = json::parse(read_file_bytes(a.dir / "attributions.json"));
    a.methods = a.index.at("methods").get<std::vector<std::string>>();
    a.samples = a.index.at("samples").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ValidationError("attributions index '" + (a.dir / "attributions.json").string() + "': " + e.what());
  }
  return a;
}

struct PdsmFlags {
  std::string preset = "fs2";
  std::optional<double> q;
  std::optional<std::string> pool;
  bool exclude_silence = false;

  void add(CLI::App* app) {
    app->add_option("--preset", preset, "Discretization preset")->check(CLI::IsMember({"tt2", "fs2"}));
    app->add_option("--q", q, "Override the quantile threshold q in [0, 1]")->check(CLI::Range(0.0, 1.0));
    app->add_option("--pool", pool, "Override pooling")->check(CLI::IsMember({"mean", "sum", "max"}));
    app->add_flag("--exclude-silence", exclude_silence, "Never select silence segments");
  }

  PdsmConfig config() const {
    PdsmConfig c = pdsm::preset(preset);
    if (q) c.q = *q;
    if (pool) c.pool = parse_pool(*pool);
    c.exclude_silence = exclude_silence;
    c.validate();
    return c;
  }

  json to_json() const {
    const PdsmConfig c = config();
    return {{"preset", preset},
            {"use_abs", c.use_abs},
            {"q", c.q},
            {"pool", to_string(c.pool)},
            {"exclude_silence", c.exclude_silence}};
  }
};

// ---- gen-synth ----

struct GenSynth {
  std::string task;
  SynthConfig cfg;
  std::string corruption = "additive_noise";
  bool no_fricatives_first = false;

  void add(CLI::App* app) {
    app->add_option("task", task, "noise or fakephoneme")->required()->check(CLI::IsMember({"noise", "fakephoneme"}));
    app->add_option("--n-train", cfg.n_train, "Training samples")->capture_default_str();
    app->add_option("--n-test", cfg.n_test, "Test samples")->capture_default_str();
    app->add_option("--bins", cfg.bins, "Frequency bins F")->capture_default_str();
    app->add_option("--frames-min", cfg.frames_min)->capture_default_str();
    app->add_option("--frames-max", cfg.frames_max)->capture_default_str();
    app->add_option("--vocab-size", cfg.vocab_size)->capture_default_str();
    app->add_option("--seg-min", cfg.seg_min, "Shortest segment in frames")->capture_default_str();
    app->add_option("--seg-max", cfg.seg_max, "Longest segment in frames")->capture_default_str();
    app->add_option("--window-min", cfg.window_frac_min, "Shortest noise window, fraction of T")->capture_default_str();
    app->add_option("--window-max", cfg.window_frac_max, "Longest noise window, fraction of T")->capture_default_str();
    app->add_option("--snr-db", cfg.snr_db, "Noise level relative to the utterance")->capture_default_str();
    app->add_option("--n-corrupt", cfg.n_corrupt_segments, "Corrupted segments per fake sample")->capture_default_str();
    app->add_option("--gain", cfg.corruption_gain, "Corruption strength")->capture_default_str();
    app->add_option("--corruption", corruption)->check(CLI::IsMember({"additive_noise", "spectral_tilt"}))->capture_default_str();
    app->add_flag("--no-fricatives-first", no_fricatives_first, "Pick corrupted segments uniformly");
  }

  int run(const Globals& g) {
    cfg.seed = g.seed;
    cfg.corruption_kind = parse_corruption(corruption);
    cfg.corrupt_fricatives_first = !no_fricatives_first;
    cfg.validate();
    Stage stage(g.out_dir);
    std::vector<std::string> warnings;
    const SynthDataset ds = task == "noise" ? gen_noise_dataset(cfg, g.threads)
                                            : gen_fake_phoneme_dataset(cfg, g.threads, &warnings);
    for (const auto& w : warnings) warn(w);
    write_dataset(ds, stage.path("."));
    stage.write("run.json", dump(run_manifest("gen-synth", g, {{"task", task}, {"generator", cfg.to_json()}})));
    stage.commit();
    std::cerr << "wrote " << ds.samples.size() << " samples to " << g.out_dir << "\n";
    return 0;
  }
};

// ---- train ----

struct Train {
  std::string data;
  TrainConfig cfg;
  std::string optimizer = "sgd_momentum";

  void add(CLI::App* app) {
    app->add_option("--data", data, "Dataset directory or manifest")->required();
    app->add_option("--epochs", cfg.epochs)->capture_default_str();
    app->add_option("--batch-size", cfg.batch_size)->capture_default_str();
    app->add_option("--lr", cfg.learning_rate)->capture_default_str();
    app->add_option("--momentum", cfg.momentum)->capture_default_str();
    app->add_option("--optimizer", optimizer)->check(CLI::IsMember({"sgd", "sgd_momentum"}))->capture_default_str();
  }

  int run(const Globals& g) {
    cfg.seed = g.seed;
    cfg.optimizer = parse_optimizer(optimizer);
    cfg.validate();
    const DatasetManifest m = open_dataset(data);
    std::vector<Matrix> inputs;
    std::vector<std::size_t> labels;
    std::vector<std::string> splits;
    for (const auto& e : m.entries) {
      inputs.push_back(m.load_spectrogram(e).data);
      labels.push_back(m.class_of(e));
      splits.push_back(e.split);
    }
    std::vector<LabeledInput> tr, te;
    for (std::size_t i = 0; i < inputs.size(); ++i)
      (splits[i] == "train" ? tr : te).push_back({&inputs[i], labels[i]});
    require(!tr.empty(), "dataset has no training samples");

    Stage stage(g.out_dir);
    const auto t0 = std::chrono::steady_clock::now();
    const TrainResult r = train(tr, cfg, g.threads);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double train_acc = accuracy(r.model, tr, g.threads);
    const double test_acc = te.empty() ? 0.0 : accuracy(r.model, te, g.threads);

    std::string log = "epoch,mean_loss,train_accuracy\n";
    for (const auto& e : r.epochs)
      log += std::to_string(e.epoch) + "," + format_real(e.mean_loss) + "," + format_real(e.accuracy) + "\n";
    const json metrics{{"n_train", tr.size()},
                       {"n_test", te.size()},
                       {"train_accuracy", train_acc},
                       {"test_accuracy", te.empty() ? json(nullptr) : json(test_acc)}};
    save_model(r.model, stage.path("."), {{"config", cfg.to_json()}, {"dataset_task", m.task}, {"dataset_seed", m.seed}});
    stage.write("train_log.csv", log);
    stage.write("metrics.json", dump(metrics));
    stage.write("run.json", dump(run_manifest("train", g, {{"data", data}, {"train", cfg.to_json()}, {"model_hash", r.model.hash()}})));
    stage.commit();
    std::fprintf(stderr, "trained in %.1f s; train accuracy %.4f, test accuracy %.4f\n", secs, train_acc, test_acc);
    return 0;
  }
};

// ---- attribute ----

struct Attribute {
  std::string data, model_dir, split = "test", config_file, baseline = "zero";
  std::vector<std::string> methods{"ig"};
  std::optional<std::string> label;
  std::optional<std::size_t> limit;
  std::optional<std::size_t> ig_steps, n_samples;
  std::optional<double> noise_sigma, noise_sigma_rel;
  std::size_t target_class = 1;

  void add(CLI::App* app) {
    app->add_option("--data", data, "Dataset directory or manifest")->required();
    app->add_option("--model", model_dir, "Model directory")->required();
    app->add_option("--method", methods, "Method name(s) or 'all'")->capture_default_str();
    app->add_option("--split", split, "Dataset split ('' for all)")->capture_default_str();
    app->add_option("--label", label, "Only samples with this class label");
    app->add_option("--limit", limit, "At most this many samples");
    app->add_option("--config", config_file, "JSON attribution config");
    app->add_option("--ig-steps", ig_steps)->check(CLI::PositiveNumber);
    app->add_option("--n-samples", n_samples, "GradSHAP samples")->check(CLI::PositiveNumber);
    app->add_option("--noise-sigma", noise_sigma, "Absolute GradSHAP noise")->check(CLI::NonNegativeNumber);
    app->add_option("--noise-sigma-rel", noise_sigma_rel, "GradSHAP noise relative to input std")->check(CLI::NonNegativeNumber);
    app->add_option("--baseline", baseline)->check(CLI::IsMember({"zero", "dataset_mean"}))->capture_default_str();
    app->add_option("--target-class", target_class)->check(CLI::Range(0, 1))->capture_default_str();
  }

  AttributionConfig base_config(std::uint64_t seed) const {
    AttributionConfig c;
    if (!config_file.empty()) {
      json j;
      try {
        j = json::parse(read_file_bytes(config_file));
        if (j.contains("ig_steps")) c.ig_steps = j["ig_steps"].get<std::size_t>();
        if (j.contains("n_samples")) c.n_samples = j["n_samples"].get<std::size_t>();
        if (j.contains("noise_sigma")) c.noise_sigma = j["noise_sigma"].get<double>();
        if (j.contains("noise_sigma_rel")) c.noise_sigma_rel = j["noise_sigma_rel"].get<double>();
        if (j.contains("baseline")) c.baseline_mode = parse_baseline(j["baseline"].get<std::string>());
      } catch (const json::exception& e) {
        throw ValidationError("attribution config '" + config_file + "': " + e.what());
      }
    }
    c.baseline_mode = config_file.empty() || baseline != "zero" ? parse_baseline(baseline) : c.baseline_mode;
    if (ig_steps) c.ig_steps = *ig_steps;
    if (n_samples) c.n_samples = *n_samples;
    if (noise_sigma) c.noise_sigma = *noise_sigma;
    if (noise_sigma_rel) c.noise_sigma_rel = *noise_sigma_rel;
    c.seed = seed;
    c.validate();
    return c;
  }

  int run(const Globals& g) {
    const std::vector<MethodId> ids = parse_methods(methods);
    const AttributionConfig cfg = base_config(g.seed);
    const DatasetManifest m = open_dataset(data);
    const ToyClassifier model = load_model(model_dir);
    if (label) {
      bool known = false;
      for (const auto& l : m.labels) known |= l == *label;
      require(known, "dataset has no class label '" + *label + "'");
    }

    std::vector<const ManifestEntry*> chosen;
    for (const ManifestEntry* e : m.split(split))
      if (!label || e->label == *label) chosen.push_back(e);
    if (limit && chosen.size() > *limit) chosen.resize(*limit);
    require(!chosen.empty(), "no samples match the selection");

    Baseline base;
    if (cfg.baseline_mode == BaselineMode::dataset_mean) {
      std::vector<Matrix> train_inputs;
      for (const ManifestEntry* e : m.split("train")) train_inputs.push_back(m.load_spectrogram(*e).data);
      require(!train_inputs.empty(), "dataset_mean baseline needs training samples");
      std::vector<const Matrix*> ptrs;
      for (const auto& x : train_inputs) ptrs.push_back(&x);
      base = dataset_mean_baseline(ptrs);
    }

    Stage stage(g.out_dir);
    const std::string hash = model.hash();
    parallel_for(chosen.size(), g.threads, [&](std::size_t i) {
      const ManifestEntry& e = *chosen[i];
      const Matrix x = m.load_spectrogram(e).data;
      const std::uint64_t s = sample_seed(g.seed, e.sample_id);
      for (MethodId id : ids) {
        AttributionConfig c = cfg;
        c.method = id;
        const SaliencyMap map = attribute(model, x, target_class, c, base, s);
        const std::string name(to_string(id));
        save_matrix(map.data, stage.path(fs::path("maps") / name / (e.sample_id + ".npy")), Precision::f32);
        const json sidecar{{"sample_id", e.sample_id}, {"method", name},      {"target_class", target_class},
                           {"sample_seed", s},         {"config", c.to_json()}, {"model_hash", hash},
                           {"shape", {x.rows(), x.cols()}}};
        stage.write(fs::path("maps") / name / (e.sample_id + ".json"), dump(sidecar));
      }
    });

    std::vector<std::string> names, ids_out;
    for (MethodId id : ids) names.emplace_back(to_string(id));
    for (const ManifestEntry* e : chosen) ids_out.push_back(e->sample_id);
    const json index{{"format", "pdsm-attributions"},
                     {"version", 1},
                     {"model_hash", hash},
                     {"target_class", target_class},
                     {"methods", names},
                     {"samples", ids_out},
                     {"config", cfg.to_json()},
                     {"precision", "f32"}};
    stage.write("attributions.json", dump(index));
    stage.write("run.json", dump(run_manifest("attribute", g, {{"data", data}, {"model", model_dir}, {"split", split},
                                                               {"label", label ? json(*label) : json(nullptr)},
                                                               {"methods", names}, {"attribution", cfg.to_json()},
                                                               {"model_hash", hash}})));
    stage.commit();
    std::cerr << "attributed " << chosen.size() << " samples x " << ids.size() << " methods\n";
    return 0;
  }
};

// ---- discretize ----

struct Discretize {
  std::string data, attr_dir, method = "ig";
  std::vector<std::string> samples;
  std::size_t k = 1;
  PdsmFlags pdsm;

  void add(CLI::App* app) {
    app->add_option("--data", data, "Dataset directory or manifest")->required();
    app->add_option("--attr-dir", attr_dir, "Output of 'attribute'")->required();
    app->add_option("--method", method)->capture_default_str();
    app->add_option("--sample", samples, "Sample id(s); default every attributed sample");
    app->add_option("--k", k, "Phonemes to keep")->capture_default_str();
    pdsm.add(app);
  }

  int run(const Globals& g) {
    PdsmConfig cfg = pdsm.config();
    cfg.k = k;
    parse_method(method);
    const DatasetManifest m = open_dataset(data);
    const AttributionSet a = open_attributions(attr_dir);
    std::vector<std::string> ids = samples.empty() ? a.samples : samples;
    for (const auto& id : ids)
      require(std::find(a.samples.begin(), a.samples.end(), id) != a.samples.end(),
              "sample '" + id + "' has no attribution in " + attr_dir);
    if (k == 0) warn("--k 0 selects no phonemes; every mask is all zeros");

    Stage stage(g.out_dir);
    std::vector<json> rows(ids.size());
    parallel_for(ids.size(), g.threads, [&](std::size_t i) {
      const ManifestEntry& e = m.find(ids[i]);
      const Matrix map = a.load(method, e.sample_id);
      const PhonemeSegmentation seg = segmentation_of(m, e, map.cols());
      const DiscretizedMask mask = discretize(map, seg, m.vocab, cfg);
      save_matrix(mask.data, stage.path(fs::path("masks") / (e.sample_id + ".npy")), Precision::f32);
      json sel = json::array();
      for (std::size_t j : mask.selected) {
        const Segment& s = seg[j];
        sel.push_back({{"segment", j}, {"label", s.phoneme < m.vocab.size() ? m.vocab[s.phoneme] : std::to_string(s.phoneme)},
                       {"start", s.start}, {"end", s.end}});
      }
      rows[i] = {{"sample_id", e.sample_id}, {"selected", sel}, {"on_frames", mask.on_frames()},
                 {"fraction", mask.fraction()}, {"segments", seg.size()}};
    });
    stage.write("masks.json", dump({{"method", method}, {"k", k}, {"masks", rows}}));
    stage.write("run.json", dump(run_manifest("discretize", g, {{"data", data}, {"attr_dir", attr_dir}, {"method", method},
                                                                {"k", k}, {"pdsm", pdsm.to_json()}})));
    stage.commit();
    return 0;
  }
};

// ---- evaluate ----

struct Evaluate {
  std::string data, model_dir, sample, mask_file, attr_dir, method = "ig";
  std::size_t k = 1, target_class = 1;
  bool continuous = false;
  PdsmFlags pdsm;

  void add(CLI::App* app) {
    app->add_option("--data", data, "Dataset directory or manifest")->required();
    app->add_option("--model", model_dir, "Model directory")->required();
    app->add_option("--sample", sample, "Sample id")->required();
    auto* mask = app->add_option("--mask", mask_file, "Mask NPY with entries in [0, 1]");
    auto* attr = app->add_option("--attr-dir", attr_dir, "Build the mask from this attribution set");
    mask->excludes(attr);
    app->add_option("--method", method)->capture_default_str();
    app->add_option("--k", k)->capture_default_str();
    app->add_flag("--continuous", continuous, "Use the normalized saliency map itself as the mask");
    app->add_option("--target-class", target_class)->check(CLI::Range(0, 1))->capture_default_str();
    pdsm.add(app);
  }

  int run(const Globals& g) {
    require(!mask_file.empty() || !attr_dir.empty(), "evaluate needs --mask or --attr-dir");
    PdsmConfig cfg = pdsm.config();
    cfg.k = k;
    const DatasetManifest m = open_dataset(data);
    const ToyClassifier model = load_model(model_dir);
    const ManifestEntry& e = m.find(sample);
    const Matrix x = m.load_spectrogram(e).data;

    Matrix mask;
    json source;
    if (!mask_file.empty()) {
      mask = load_matrix(mask_file);
      source = {{"mask", mask_file}};
    } else {
      const Matrix map = open_attributions(attr_dir).load(method, sample);
      if (continuous) {
        mask = normalize_continuous_map(map);
      } else {
        mask = discretize(map, segmentation_of(m, e, map.cols()), m.vocab, cfg).data;
      }
      source = {{"attr_dir", attr_dir}, {"method", method}, {"variant", continuous ? "continuous" : "pdsm"}};
      if (!continuous) source["k"] = k, source["pdsm"] = pdsm.to_json();
    }
    require(mask.same_shape(x), "mask shape does not match the spectrogram of '" + sample + "'");
    const double ff = faithfulness(model, x, mask, target_class);
    Matrix kept = x;
    for (std::size_t i = 0; i < x.size(); ++i) kept.values()[i] *= 1.0 - mask.values()[i];
    double frac = 0;
    for (double v : mask.values()) frac += v;
    frac /= static_cast<double>(mask.size());

    Stage stage(g.out_dir);
    const json out{{"sample_id", sample},
                   {"target_class", target_class},
                   {"p_full", forward(model, x)[target_class]},
                   {"p_masked", forward(model, kept)[target_class]},
                   {"ff", ff},
                   {"mask_fraction", frac},
                   {"source", source},
                   {"model_hash", model.hash()}};
    stage.write("evaluate.json", dump(out));
    stage.write("run.json", dump(run_manifest("evaluate", g, {{"data", data}, {"model", model_dir}, {"source", source}})));
    stage.commit();
    std::cout << format_real(ff) << "\n";
    return 0;
  }
};

// ---- sweep-k ----

struct SweepK {
  std::string data, model_dir, attr_dir;
  std::vector<std::string> methods;
  std::size_t k_max = 10, n_random = 5, target_class = 1;
  bool include_zero = false;
  PdsmFlags pdsm;

  void add(CLI::App* app) {
    app->add_option("--data", data, "Dataset directory or manifest")->required();
    app->add_option("--model", model_dir, "Model directory")->required();
    app->add_option("--attr-dir", attr_dir, "Output of 'attribute'")->required();
    app->add_option("--method", methods, "Methods to evaluate; default every attributed method");
    app->add_option("--k-max", k_max, "Sweep k = 1..k_max")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_flag("--include-zero", include_zero, "Also emit k = 0 rows");
    app->add_option("--random-seeds", n_random, "Random-phoneme masks per (sample, k)")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--target-class", target_class)->check(CLI::Range(0, 1))->capture_default_str();
    pdsm.add(app);
  }

  int run(const Globals& g) {
    SweepConfig cfg;
    cfg.pdsm = pdsm.config();
    cfg.target_class = target_class;
    for (std::size_t k = include_zero ? 0 : 1; k <= k_max; ++k) cfg.k_values.push_back(k);
    cfg.seeds.clear();
    for (std::size_t i = 0; i < n_random; ++i) cfg.seeds.push_back(Rng::mix(g.seed, i));
    const DatasetManifest m = open_dataset(data);
    cfg.vocab = m.vocab;
    const ToyClassifier model = load_model(model_dir);
    const AttributionSet a = open_attributions(attr_dir);
    if (a.index.value("model_hash", "") != model.hash())
      warn("attributions were computed with a different model (" + a.index.value("model_hash", "?") + ")");
    std::vector<std::string> use = methods.empty() ? a.methods : methods;
    for (const auto& name : use) parse_method(name);

    std::vector<Matrix> inputs(a.samples.size());
    std::vector<EvalSample> samples(a.samples.size());
    parallel_for(a.samples.size(), g.threads, [&](std::size_t i) {
      const ManifestEntry& e = m.find(a.samples[i]);
      inputs[i] = m.load_spectrogram(e).data;
      samples[i].sample_id = e.sample_id;
      samples[i].input = &inputs[i];
      samples[i].segmentation = segmentation_of(m, e, inputs[i].cols());
      for (const auto& name : use) samples[i].maps[name] = a.load(name, e.sample_id);
    });
    std::vector<const EvalSample*> ptrs;
    for (const auto& s : samples) ptrs.push_back(&s);
    FaithfulnessReport rep = sweep_k(model, ptrs, cfg, g.threads);
    rep.metadata["pdsm"] = pdsm.to_json();

    Stage stage(g.out_dir);
    stage.write("sweep.csv", report_csv(rep));
    stage.write("curve.csv", curve_csv(length_normalized_curve(rep)));
    stage.write("summary.json", dump(table_summary(rep)));
    stage.write("run.json", dump(run_manifest("sweep-k", g, {{"data", data}, {"model", model_dir}, {"attr_dir", attr_dir},
                                                             {"methods", use}, {"k_values", cfg.k_values},
                                                             {"random_seeds", cfg.seeds}, {"target_class", target_class},
                                                             {"pdsm", pdsm.to_json()}})));
    stage.commit();
    return 0;
  }
};

// ---- global-importance ----

struct GlobalImportance {
  std::string data, attr_dir, method = "ig";
  bool raw = false;
  PdsmFlags pdsm;

  void add(CLI::App* app) {
    app->add_option("--data", data, "Dataset directory or manifest")->required();
    app->add_option("--attr-dir", attr_dir, "Output of 'attribute'")->required();
    app->add_option("--method", method)->capture_default_str();
    app->add_flag("--raw", raw, "Pool the raw maps instead of the preprocessed ones");
    pdsm.add(app);
  }

  int run(const Globals& g) {
    const PdsmConfig cfg = pdsm.config();
    parse_method(method);
    const DatasetManifest m = open_dataset(data);
    const AttributionSet a = open_attributions(attr_dir);
    std::vector<Matrix> maps(a.samples.size());
    std::vector<PhonemeSegmentation> segs(a.samples.size());
    parallel_for(a.samples.size(), g.threads, [&](std::size_t i) {
      const ManifestEntry& e = m.find(a.samples[i]);
      maps[i] = a.load(method, e.sample_id);
      segs[i] = segmentation_of(m, e, maps[i].cols());
    });
    std::vector<ImportanceItem> items;
    for (std::size_t i = 0; i < maps.size(); ++i) items.push_back({&maps[i], &segs[i]});
    const ImportanceTable table = global_importance(items, m.vocab, cfg, raw);

    Stage stage(g.out_dir);
    stage.write("importance.csv", importance_csv(table));
    stage.write("run.json", dump(run_manifest("global-importance", g, {{"data", data}, {"attr_dir", attr_dir}, {"method", method},
                                                                       {"raw", raw}, {"samples", a.samples.size()},
                                                                       {"pdsm", pdsm.to_json()}})));
    stage.commit();
    return 0;
  }
};

// ---- rank ----

struct Rank {
  std::string data, attr_dir, method = "ig";
  std::vector<std::string> samples;
  std::size_t top = 10;
  PdsmFlags pdsm;

  void add(CLI::App* app) {
    app->add_option("--data", data, "Dataset directory or manifest")->required();
    app->add_option("--attr-dir", attr_dir, "Output of 'attribute'")->required();
    app->add_option("--method", method)->capture_default_str();
    app->add_option("--sample", samples, "Sample id(s); default every attributed sample");
    app->add_option("--top", top, "Phonemes per sample")->check(CLI::PositiveNumber)->capture_default_str();
    pdsm.add(app);
  }

  int run(const Globals& g) {
    const PdsmConfig cfg = pdsm.config();
    parse_method(method);
    const DatasetManifest m = open_dataset(data);
    const AttributionSet a = open_attributions(attr_dir);
    const std::vector<std::string> ids = samples.empty() ? a.samples : samples;
    json out = json::array();
    for (const auto& id : ids) {
      const ManifestEntry& e = m.find(id);
      const auto ranked = rank_phonemes(a.load(method, id), m.load_posteriorgram(e), cfg, top);
      json r = json::array();
      for (const auto& p : ranked)
        r.push_back({{"rank", p.rank}, {"label", p.label}, {"start", p.start}, {"end", p.end}, {"energy", p.energy}});
      json item{{"sample_id", id}, {"label", e.label}, {"ranking", r}};
      if (!e.corrupted_segments.empty()) item["corrupted_segments"] = e.corrupted_segments;
      if (e.window) item["window"] = {e.window->start, e.window->end};
      out.push_back(item);
    }
    Stage stage(g.out_dir);
    stage.write("rank.json", dump({{"method", method}, {"top", top}, {"samples", out}}));
    stage.write("run.json", dump(run_manifest("rank", g, {{"data", data}, {"attr_dir", attr_dir}, {"method", method},
                                                          {"top", top}, {"pdsm", pdsm.to_json()}})));
    stage.commit();
    return 0;
  }
};

// ---- report ----

struct Report {
  std::string sweep;
  std::optional<std::size_t> k;

  void add(CLI::App* app) {
    app->add_option("--sweep", sweep, "Output directory of 'sweep-k' (or its sweep.csv)")->required();
    app->add_option("--k", k, "Only rows with this k; default every k >= 1");
  }

  int run(const Globals& g) {
    fs::path p(sweep);
    if (fs::is_directory(p)) p /= "sweep.csv";
    const FaithfulnessReport rep = parse_report_csv(read_file_bytes(p));
    require(!rep.rows.empty(), "sweep report '" + p.string() + "' has no rows");
    json table = table_summary(rep, k);
    table.erase("metadata");
    std::string csv = "method,pdsm,random,continuous,pdsm_over_continuous\n";
    for (const auto& [method, v] : table["methods"].items()) {
      const double pd = v.value("pdsm", 0.0), rnd = v.value("random", 0.0), cont = v.value("continuous", 0.0);
      csv += method + "," + format_real(pd) + "," + format_real(rnd) + "," + format_real(cont) + "," +
             (cont != 0.0 ? format_real(pd / cont) : std::string("inf")) + "\n";
    }
    Stage stage(g.out_dir);
    stage.write("table1.json", dump(table));
    stage.write("table1.csv", csv);
    stage.write("run.json", dump(run_manifest("report", g, {{"sweep", sweep}, {"k", k ? json(*k) : json("all k >= 1")}})));
    stage.commit();
    std::cout << csv;
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phoneme discretized saliency maps: synthetic data, toy classifier, attribution and faithfulness reports"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice")->envname("PDSM_SEED")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_option("--threads", g.threads, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  GenSynth gen;
  Train tr;
  Attribute at;
  Discretize di;
  Evaluate ev;
  SweepK sw;
  GlobalImportance gi;
  Rank rk;
  Report rp;
  std::map<CLI::App*, std::function<int()>> handlers;
  auto sub = [&](const char* name, const char* help, auto& cmd) {
    CLI::App* s = app.add_subcommand(name, help);
    cmd.add(s);
    handlers[s] = [&cmd, &g] { return cmd.run(g); };
  };
  sub("gen-synth", "Generate a synthetic dataset (noise or fakephoneme)", gen);
  sub("train", "Train the toy classifier", tr);
  sub("attribute", "Compute saliency maps", at);
  sub("discretize", "Turn saliency maps into phoneme masks", di);
  sub("evaluate", "Faithfulness of one sample under one mask", ev);
  sub("sweep-k", "Faithfulness versus k for PDSM, random and continuous masks", sw);
  sub("global-importance", "Duration-normalized pooled energy per phoneme", gi);
  sub("rank", "Top phonemes per sample", rk);
  sub("report", "Per-method summary of a sweep", rp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 1;
  }

  try {
    if (g.out_dir.empty()) throw ValidationError("--out-dir is required");
    for (auto& [s, run] : handlers)
      if (s->parsed()) return run();
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace pdsm::cli

int main(int argc, char** argv) { return pdsm::cli::main(argc, argv); }
