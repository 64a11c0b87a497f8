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

// Saliency methods over the toy classifier. Every method explains the
// class-c probability and returns a map with the input's shape.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pdsm/model.hpp"
#include "pdsm/rng.hpp"
#include "pdsm/types.hpp"

namespace pdsm {

enum class BaselineMode { zero, dataset_mean };

inline BaselineMode parse_baseline(std::string_view s) {
  if (s == "zero") return BaselineMode::zero;
  if (s == "dataset_mean") return BaselineMode::dataset_mean;
  throw ValidationError("unknown baseline mode '" + std::string(s) + "'");
}

inline std::string_view to_string(BaselineMode b) {
  return b == BaselineMode::zero ? "zero" : "dataset_mean";
}

struct AttributionConfig {
  MethodId method = MethodId::ig;
  std::size_t ig_steps = 128;
  BaselineMode baseline_mode = BaselineMode::zero;
  std::size_t n_samples = 32;
  /// Absolute GradSHAP noise level; when unset, noise_sigma_rel * std(X).
  std::optional<double> noise_sigma;
  double noise_sigma_rel = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    require(ig_steps >= 1, "attribution config: ig_steps must be at least 1");
    require(n_samples >= 1, "attribution config: n_samples must be at least 1");
    require(!noise_sigma || *noise_sigma >= 0.0, "attribution config: noise_sigma must be nonnegative");
    require(noise_sigma_rel >= 0.0, "attribution config: noise_sigma_rel must be nonnegative");
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"method", to_string(method)},       {"ig_steps", ig_steps},
                     {"baseline", to_string(baseline_mode)}, {"n_samples", n_samples},
                     {"noise_sigma_rel", noise_sigma_rel}, {"seed", seed}};
    if (noise_sigma) j["noise_sigma"] = *noise_sigma;
    return j;
  }
};

/// Reference input for path and difference methods. `bin_means` empty
/// means the zero spectrogram; otherwise a per-frequency profile broadcast
/// across time (so one baseline serves utterances of any length).
struct Baseline {
  std::vector<double> bin_means;

  Matrix materialize(std::size_t rows, std::size_t cols) const {
    if (bin_means.empty()) return Matrix(rows, cols, 0.0);
    require(bin_means.size() == rows, "baseline profile has " + std::to_string(bin_means.size()) +
                                          " bins, input has " + std::to_string(rows));
    Matrix b(rows, cols);
    for (std::size_t f = 0; f < rows; ++f) std::fill(b.row(f).begin(), b.row(f).end(), bin_means[f]);
    return b;
  }
};

/// Per-bin mean over every frame of every input.
inline Baseline dataset_mean_baseline(const std::vector<const Matrix*>& inputs) {
  require(!inputs.empty(), "dataset_mean baseline needs at least one input");
  Baseline b;
  b.bin_means.assign(inputs.front()->rows(), 0.0);
  double frames = 0;
  for (const Matrix* m : inputs) {
    require(m->rows() == b.bin_means.size(), "dataset_mean baseline: inconsistent bin counts");
    for (std::size_t f = 0; f < m->rows(); ++f)
      for (double v : m->row(f)) b.bin_means[f] += v;
    frames += static_cast<double>(m->cols());
  }
  for (double& v : b.bin_means) v /= frames;
  return b;
}

inline Matrix gradient_saliency(const ToyClassifier& m, const Matrix& x, std::size_t c) {
  return input_gradient(m, x, c);
}

inline Matrix grad_input(const ToyClassifier& m, const Matrix& x, std::size_t c) {
  return hadamard(x, input_gradient(m, x, c));
}

/// (X - X0) * mean_i grad f_c(X0 + (i - 1/2)/m (X - X0)), i = 1..m.
inline Matrix integrated_gradients(const ToyClassifier& model, const Matrix& x, std::size_t c,
                                   const Matrix& x0, std::size_t steps) {
  require(steps >= 1, "integrated_gradients: steps must be at least 1");
  require(x.same_shape(x0), "integrated_gradients: baseline shape mismatch");
  Matrix diff(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) diff.values()[i] = x.values()[i] - x0.values()[i];
  Matrix acc(x.rows(), x.cols(), 0.0);
  Matrix point(x.rows(), x.cols());
  for (std::size_t s = 0; s < steps; ++s) {
    const double alpha = (static_cast<double>(s) + 0.5) / static_cast<double>(steps);
    for (std::size_t i = 0; i < x.size(); ++i) point.values()[i] = x0.values()[i] + alpha * diff.values()[i];
    const Matrix g = input_gradient(model, point, c);
    for (std::size_t i = 0; i < x.size(); ++i) acc.values()[i] += g.values()[i];
  }
  const double inv = 1.0 / static_cast<double>(steps);
  for (std::size_t i = 0; i < x.size(); ++i) acc.values()[i] *= diff.values()[i] * inv;
  return acc;
}

/// Expected-gradients sampling. Per sample, in this draw order: baseline
/// index below(|B|), alpha = uniform(), then one normal() per cell
/// (row-major) when sigma > 0.
inline Matrix gradient_shap(const ToyClassifier& model, const Matrix& x, std::size_t c,
                            const std::vector<Matrix>& baselines, std::size_t n_samples, double sigma,
                            std::uint64_t seed) {
  require(!baselines.empty(), "gradient_shap: empty baseline set");
  require(n_samples >= 1, "gradient_shap: n_samples must be at least 1");
  for (const auto& b : baselines) require(b.same_shape(x), "gradient_shap: baseline shape mismatch");
  Rng rng(seed);
  Matrix acc(x.rows(), x.cols(), 0.0);
  Matrix point(x.rows(), x.cols());
  for (std::size_t s = 0; s < n_samples; ++s) {
    const Matrix& b = baselines[static_cast<std::size_t>(rng.below(baselines.size()))];
    const double alpha = rng.uniform();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double eps = sigma > 0 ? sigma * rng.normal() : 0.0;
      point.values()[i] = b.values()[i] + alpha * (x.values()[i] - b.values()[i]) + eps;
    }
    const Matrix g = input_gradient(model, point, c);
    for (std::size_t i = 0; i < x.size(); ++i) acc.values()[i] += (x.values()[i] - b.values()[i]) * g.values()[i];
  }
  const double inv = 1.0 / static_cast<double>(n_samples);
  for (double& v : acc.values()) v *= inv;
  return acc;
}

inline Matrix guided_backprop(const ToyClassifier& m, const Matrix& x, std::size_t c) {
  return input_gradient(m, x, c, ReluRule::guided);
}

/// DeepLift with the Rescale rule on every rectifier and on the output
/// logistic (p_c = sigmoid(z_c - z_other)); linear layers pass multipliers
/// through their weights. Returns multiplier * (X - X0).
inline Matrix deeplift_rescale(const ToyClassifier& model, const Matrix& x, std::size_t c,
                               const Matrix& x0) {
  require(c < kNumClasses, "class index out of range");
  require(x.same_shape(x0), "deeplift_rescale: baseline shape mismatch");
  const Activations a = forward_cached(model, x);
  const Activations r = forward_cached(model, x0);
  const std::size_t o = 1 - c;
  const double dd = (a.logits[c] - a.logits[o]) - (r.logits[c] - r.logits[o]);
  const double dp = a.probs[c] - r.probs[c];
  const double mult = std::fabs(dd) > model_detail::kRescaleEps ? dp / dd : a.probs[c] * (1.0 - a.probs[c]);
  std::array<double, kNumClasses> dlogits{};
  dlogits[c] = mult;
  dlogits[o] = -mult;
  Matrix dx;
  backward(model, x, a, dlogits, ReluRule::rescale, &r, &dx, {});
  for (std::size_t i = 0; i < x.size(); ++i) dx.values()[i] *= x.values()[i] - x0.values()[i];
  return dx;
}

inline double input_std(const Matrix& x) {
  double mean = 0.0;
  for (double v : x.values()) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x.values()) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(x.size()));
}

/// Dispatch on cfg.method. `seed` feeds the stochastic methods only.
inline SaliencyMap attribute(const ToyClassifier& model, const Matrix& x, std::size_t c,
                             const AttributionConfig& cfg, const Baseline& baseline,
                             std::uint64_t seed) {
  cfg.validate();
  check_input(x);
  SaliencyMap out;
  out.method = cfg.method;
  out.target_class = static_cast<int>(c);
  switch (cfg.method) {
    case MethodId::gradient:
      out.data = gradient_saliency(model, x, c);
      break;
    case MethodId::grad_input:
      out.data = grad_input(model, x, c);
      break;
    case MethodId::ig:
      out.data = integrated_gradients(model, x, c, baseline.materialize(x.rows(), x.cols()), cfg.ig_steps);
      break;
    case MethodId::gradshap: {
      const double sigma = cfg.noise_sigma ? *cfg.noise_sigma : cfg.noise_sigma_rel * input_std(x);
      out.data = gradient_shap(model, x, c, {baseline.materialize(x.rows(), x.cols())}, cfg.n_samples,
                               sigma, seed);
      break;
    }
    case MethodId::guided_bp:
      out.data = guided_backprop(model, x, c);
      break;
    case MethodId::deeplift:
      out.data = deeplift_rescale(model, x, c, baseline.materialize(x.rows(), x.cols()));
      break;
  }
  return out;
}

}  // namespace pdsm
