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
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pdsm/model.hpp"
#include "pdsm/parallel.hpp"
#include "pdsm/rng.hpp"

namespace pdsm {

enum class Optimizer { sgd, sgd_momentum };

inline Optimizer parse_optimizer(std::string_view s) {
  if (s == "sgd") return Optimizer::sgd;
  if (s == "sgd_momentum") return Optimizer::sgd_momentum;
  throw ValidationError("unknown optimizer '" + std::string(s) + "'");
}

inline std::string_view to_string(Optimizer o) { return o == Optimizer::sgd ? "sgd" : "sgd_momentum"; }

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  double learning_rate = 0.02;
  double momentum = 0.9;
  std::uint64_t seed = 1;
  Optimizer optimizer = Optimizer::sgd_momentum;

  void validate() const {
    require(epochs > 0 && batch_size > 0, "train config: epochs and batch size must be positive");
    require(learning_rate > 0 && std::isfinite(learning_rate), "train config: learning rate must be positive");
    require(momentum >= 0 && momentum < 1, "train config: momentum must lie in [0, 1)");
  }

  nlohmann::json to_json() const {
    return {{"epochs", epochs},         {"batch_size", batch_size}, {"learning_rate", learning_rate},
            {"momentum", momentum},     {"seed", seed},             {"optimizer", to_string(optimizer)}};
  }
};

struct LabeledInput {
  const Matrix* x;
  std::size_t label;
};

struct EpochLog {
  std::size_t epoch;
  double mean_loss;
  double accuracy;
};

struct TrainResult {
  ToyClassifier model;
  std::vector<EpochLog> epochs;
  std::vector<double> batch_losses;
};

/// Mini-batch cross-entropy training. Per-sample gradients may be computed
/// on several threads but are summed in batch order, so the result is
/// bit-identical for any thread count.
inline TrainResult train(const std::vector<LabeledInput>& data, const TrainConfig& cfg,
                         unsigned threads = 1) {
  cfg.validate();
  require(!data.empty(), "train: empty training set");
  bool seen[kNumClasses] = {false, false};
  for (const auto& d : data) {
    require(d.label < kNumClasses, "train: label out of range");
    seen[d.label] = true;
  }
  require(seen[0] && seen[1], "train: training set must contain both classes");

  TrainResult out{ToyClassifier::initialize(cfg.seed), {}, {}};
  ToyClassifier& model = out.model;
  Rng order_rng = Rng(cfg.seed).split("batch-order");
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> velocity(ToyClassifier::kNumParams, 0.0);
  std::vector<std::vector<double>> sample_grads(cfg.batch_size,
                                                std::vector<double>(ToyClassifier::kNumParams));
  std::vector<double> sample_loss(cfg.batch_size);
  std::vector<int> sample_correct(cfg.batch_size);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t correct = 0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
      const std::size_t bn = std::min(cfg.batch_size, order.size() - b0);
      parallel_for(bn, threads, [&](std::size_t i) {
        const LabeledInput& s = data[order[b0 + i]];
        auto& g = sample_grads[i];
        std::fill(g.begin(), g.end(), 0.0);
        const Activations a = forward_cached(model, *s.x);
        std::array<double, kNumClasses> dlogits{};
        for (std::size_t k = 0; k < kNumClasses; ++k) dlogits[k] = a.probs[k] - (k == s.label ? 1.0 : 0.0);
        backward(model, *s.x, a, dlogits, ReluRule::gradient, nullptr, nullptr, g);
        sample_loss[i] = -std::log(std::max(a.probs[s.label], 1e-300));
        sample_correct[i] = a.probs[s.label] > 0.5 ? 1 : 0;
      });
      std::vector<double> grad(ToyClassifier::kNumParams, 0.0);
      double batch_loss = 0.0;
      for (std::size_t i = 0; i < bn; ++i) {
        for (std::size_t p = 0; p < grad.size(); ++p) grad[p] += sample_grads[i][p];
        batch_loss += sample_loss[i];
        correct += static_cast<std::size_t>(sample_correct[i]);
      }
      const double scale = 1.0 / static_cast<double>(bn);
      auto params = model.params();
      for (std::size_t p = 0; p < grad.size(); ++p) {
        const double gp = grad[p] * scale;
        if (cfg.optimizer == Optimizer::sgd_momentum) {
          velocity[p] = cfg.momentum * velocity[p] - cfg.learning_rate * gp;
          params[p] += velocity[p];
        } else {
          params[p] -= cfg.learning_rate * gp;
        }
      }
      out.batch_losses.push_back(batch_loss * scale);
      epoch_loss += batch_loss;
    }
    out.epochs.push_back({epoch + 1, epoch_loss / static_cast<double>(data.size()),
                          static_cast<double>(correct) / static_cast<double>(data.size())});
  }
  return out;
}

/// Fraction of inputs whose argmax class equals the label.
inline double accuracy(const ToyClassifier& m, const std::vector<LabeledInput>& data,
                       unsigned threads = 1) {
  if (data.empty()) return 0.0;
  std::vector<int> ok(data.size());
  parallel_for(data.size(), threads, [&](std::size_t i) {
    const auto p = forward(m, *data[i].x);
    const std::size_t pred = p[1] > p[0] ? 1 : 0;
    ok[i] = pred == data[i].label ? 1 : 0;
  });
  std::size_t n = 0;
  for (int v : ok) n += static_cast<std::size_t>(v);
  return static_cast<double>(n) / static_cast<double>(data.size());
}

}  // namespace pdsm
