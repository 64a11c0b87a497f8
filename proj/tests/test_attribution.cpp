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

#include <cmath>
#include <cstdlib>
#include <vector>

#include "pdsm/attribution.hpp"
#include "pdsm/npy.hpp"
#include "test_util.hpp"

namespace pdsm {
namespace {

using testing::random_matrix;
using testing::random_model;

const std::filesystem::path kData = PDSM_TEST_DATA;

double mean_abs(const Matrix& m) {
  double s = 0;
  for (double v : m.values()) s += std::fabs(v);
  return s / static_cast<double>(m.size());
}

// Snapshot comparison; PDSM_WRITE_GOLDEN=1 regenerates the file.
void check_golden(const Matrix& got, const std::string& name) {
  const auto path = kData / name;
  if (std::getenv("PDSM_WRITE_GOLDEN")) save_matrix(got, path);
  const Matrix want = load_matrix(path);
  ASSERT_TRUE(want.same_shape(got));
  for (std::size_t i = 0; i < got.size(); ++i)
    ASSERT_NEAR(got.values()[i], want.values()[i], 1e-12 * (1.0 + std::fabs(want.values()[i])));
}

TEST(Gradient, EqualsInputGradientAndVanishesForConstantModel) {
  const ToyClassifier m = random_model(1);
  const Matrix x = random_matrix(8, 8, 2);
  EXPECT_EQ(gradient_saliency(m, x, 1), input_gradient(m, x, 1));
  ToyClassifier c = m;
  std::fill(c.conv1_w().begin(), c.conv1_w().end(), 0.0);
  EXPECT_EQ(gradient_saliency(c, x, 1), Matrix(8, 8, 0.0));
}

TEST(Gradient, DependsOnInputScale) {
  const ToyClassifier m = random_model(3);
  const Matrix x = random_matrix(8, 8, 4);
  Matrix x2 = x;
  for (double& v : x2.values()) v *= 2;
  EXPECT_NE(gradient_saliency(m, x, 1), gradient_saliency(m, x2, 1));
  EXPECT_EQ(gradient_saliency(m, x2, 1), gradient_saliency(m, x2, 1));
}

TEST(GradInput, ZeroInputAndDefinition) {
  const ToyClassifier m = random_model(5);
  EXPECT_EQ(grad_input(m, Matrix(6, 6, 0.0), 1), Matrix(6, 6, 0.0));
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Matrix x = random_matrix(6, 9, 50 + s);
    EXPECT_EQ(grad_input(m, x, 1), hadamard(x, gradient_saliency(m, x, 1)));
  }
}

TEST(GradInput, GoldenSnapshot) {
  check_golden(grad_input(random_model(77), random_matrix(8, 12, 78), 1), "golden_grad_input.npy");
}

TEST(IntegratedGradients, ZeroWhenInputEqualsBaseline) {
  const ToyClassifier m = random_model(6);
  const Matrix x = random_matrix(8, 8, 7);
  EXPECT_EQ(integrated_gradients(m, x, 1, x, 16), Matrix(8, 8, 0.0));
}

TEST(IntegratedGradients, CompletenessAt512Steps) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const ToyClassifier m = random_model(100 + s, 0.5);
    const Matrix x = random_matrix(8, 10, 200 + s, 0.0, 3.0);
    const Matrix x0 = Matrix(8, 10, 0.0);
    const double delta = forward(m, x)[1] - forward(m, x0)[1];
    const double total = sum(integrated_gradients(m, x, 1, x0, 512));
    EXPECT_LE(std::fabs(total - delta), 0.01 * std::fabs(delta) + 1e-6) << "seed " << s;
  }
}

TEST(IntegratedGradients, SingleStepIsMidpointGradInput) {
  const ToyClassifier m = random_model(8);
  const Matrix x = random_matrix(8, 8, 9), x0 = random_matrix(8, 8, 10);
  Matrix mid(8, 8), diff(8, 8);
  for (std::size_t i = 0; i < x.size(); ++i) {
    mid.values()[i] = x0.values()[i] + 0.5 * (x.values()[i] - x0.values()[i]);
    diff.values()[i] = x.values()[i] - x0.values()[i];
  }
  EXPECT_EQ(integrated_gradients(m, x, 1, x0, 1), hadamard(input_gradient(m, mid, 1), diff));
}

TEST(GradientShap, ZeroWhenBaselineIsInputAndNoNoise) {
  const ToyClassifier m = random_model(11);
  const Matrix x = random_matrix(8, 8, 12);
  EXPECT_EQ(gradient_shap(m, x, 1, {x}, 8, 0.0, 3), Matrix(8, 8, 0.0));
  EXPECT_THROW(gradient_shap(m, x, 1, {}, 8, 0.0, 3), ValidationError);
}

TEST(GradientShap, DeterministicPerSeed) {
  const ToyClassifier m = random_model(13);
  const Matrix x = random_matrix(8, 8, 14);
  const std::vector<Matrix> b{Matrix(8, 8, 0.0), random_matrix(8, 8, 15)};
  EXPECT_EQ(gradient_shap(m, x, 1, b, 16, 0.1, 42), gradient_shap(m, x, 1, b, 16, 0.1, 42));
  EXPECT_NE(gradient_shap(m, x, 1, b, 16, 0.1, 42), gradient_shap(m, x, 1, b, 16, 0.1, 43));
}

TEST(GradientShap, FollowsDocumentedDrawOrder) {
  const ToyClassifier m = random_model(16);
  const Matrix x = random_matrix(5, 6, 17);
  const std::vector<Matrix> b{Matrix(5, 6, 0.0), random_matrix(5, 6, 18)};
  const double sigma = 0.05;
  Rng rng(7);
  Matrix want(5, 6, 0.0);
  for (int s = 0; s < 2; ++s) {
    const Matrix& base = b[rng.below(2)];
    const double alpha = rng.uniform();
    Matrix point(5, 6);
    for (std::size_t i = 0; i < x.size(); ++i)
      point.values()[i] = base.values()[i] + alpha * (x.values()[i] - base.values()[i]) + sigma * rng.normal();
    const Matrix g = input_gradient(m, point, 1);
    for (std::size_t i = 0; i < x.size(); ++i)
      want.values()[i] += 0.5 * (x.values()[i] - base.values()[i]) * g.values()[i];
  }
  const Matrix got = gradient_shap(m, x, 1, b, 2, sigma, 7);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(got.values()[i], want.values()[i], 1e-15);
}

TEST(GradientShap, ApproachesIntegratedGradientsWithManySamples) {
  const ToyClassifier m = random_model(19, 0.5);
  const Matrix x = random_matrix(8, 8, 20, 0.0, 2.0);
  const Matrix zero(8, 8, 0.0);
  const Matrix ig = integrated_gradients(m, x, 1, zero, 512);
  const Matrix gs = gradient_shap(m, x, 1, {zero}, 1024, 0.0, 21);
  Matrix d(8, 8);
  for (std::size_t i = 0; i < d.size(); ++i) d.values()[i] = gs.values()[i] - ig.values()[i];
  EXPECT_LT(mean_abs(d), 0.1 * mean_abs(ig));
}

TEST(GuidedBackprop, GoldenSnapshot) {
  check_golden(guided_backprop(random_model(77), random_matrix(8, 12, 78), 1), "golden_guided_bp.npy");
}

TEST(DeepLift, ZeroWhenInputEqualsBaseline) {
  const ToyClassifier m = random_model(22);
  const Matrix x = random_matrix(8, 8, 23);
  EXPECT_EQ(deeplift_rescale(m, x, 1, x), Matrix(8, 8, 0.0));
}

TEST(DeepLift, SummationToDelta) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const ToyClassifier m = random_model(300 + s, 0.5);
    const Matrix x = random_matrix(8, 10, 400 + s, 0.0, 3.0);
    const Matrix x0 = s % 2 ? Matrix(8, 10, 0.0) : random_matrix(8, 10, 500 + s);
    for (std::size_t c : {0u, 1u}) {
      const double delta = forward(m, x)[c] - forward(m, x0)[c];
      EXPECT_NEAR(sum(deeplift_rescale(m, x, c, x0)), delta, 1e-6);
    }
  }
}

TEST(DeepLift, LinearRegimeMatchesLogitGradientTimesDifference) {
  // Positive weights and inputs keep every rectifier active at both points,
  // so the network is affine up to the output logistic.
  ToyClassifier m;
  Rng rng(24);
  for (double& w : m.conv1_w()) w = rng.uniform(0.1, 0.5);
  for (double& w : m.conv1_b()) w = rng.uniform(0.1, 0.5);
  for (double& w : m.conv2_w()) w = rng.uniform(0.01, 0.05);
  for (double& w : m.conv2_b()) w = rng.uniform(0.1, 0.5);
  for (double& w : m.head_w()) w = rng.uniform(-0.5, 0.5);
  const Matrix x = random_matrix(8, 8, 25, 0.5, 1.0), x0 = random_matrix(8, 8, 26, 0.0, 0.4);
  const auto ax = forward_cached(m, x), a0 = forward_cached(m, x0);
  const double dd = (ax.logits[1] - ax.logits[0]) - (a0.logits[1] - a0.logits[0]);
  const double dp = ax.probs[1] - a0.probs[1];
  const Matrix dl = deeplift_rescale(m, x, 1, x0);
  const Matrix g = input_gradient(m, x, 1);
  const double local = ax.probs[1] * (1 - ax.probs[1]);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double want = g.values()[i] / local * (x.values()[i] - x0.values()[i]);
    EXPECT_NEAR(dl.values()[i] * dd / dp, want, 1e-12 * (1 + std::fabs(want)));
  }
}

TEST(Attribute, EveryMethodReturnsInputShape) {
  const ToyClassifier m = random_model(27);
  const Matrix x = random_matrix(9, 13, 28);
  AttributionConfig cfg;
  cfg.ig_steps = 4;
  cfg.n_samples = 4;
  for (MethodId id : kAllMethods) {
    cfg.method = id;
    const SaliencyMap s = attribute(m, x, 1, cfg, Baseline{}, 5);
    EXPECT_TRUE(s.data.same_shape(x)) << to_string(id);
    EXPECT_TRUE(all_finite(s.data));
    EXPECT_EQ(s.method, id);
    EXPECT_EQ(parse_method(to_string(id)), id);
  }
  EXPECT_THROW(parse_method("lrp"), ValidationError);
}

TEST(Attribute, DatasetMeanBaselineBroadcastsPerBin) {
  const Matrix a{{1, 3}, {2, 2}}, b{{5, 5, 5}, {0, 0, 0}};
  const Baseline base = dataset_mean_baseline({&a, &b});
  EXPECT_DOUBLE_EQ(base.bin_means[0], 19.0 / 5.0);
  EXPECT_DOUBLE_EQ(base.bin_means[1], 4.0 / 5.0);
  const Matrix mat = base.materialize(2, 4);
  EXPECT_DOUBLE_EQ(mat(0, 3), 19.0 / 5.0);
  EXPECT_THROW(base.materialize(3, 4), ValidationError);
}

TEST(Attribute, IgWithDatasetMeanBaselineIsComplete) {
  const ToyClassifier m = random_model(29, 0.5);
  const Matrix x = random_matrix(8, 8, 30, 0.0, 2.0);
  const Matrix other = random_matrix(8, 8, 31, 0.0, 2.0);
  const Baseline base = dataset_mean_baseline({&x, &other});
  AttributionConfig cfg;
  cfg.ig_steps = 512;
  const double delta = forward(m, x)[1] - forward(m, base.materialize(8, 8))[1];
  EXPECT_NEAR(sum(attribute(m, x, 1, cfg, base, 0).data), delta, 0.01 * std::fabs(delta) + 1e-6);
}

TEST(Attribute, RejectsInvalidConfig) {
  AttributionConfig cfg;
  cfg.ig_steps = 0;
  EXPECT_THROW(attribute(random_model(1), random_matrix(4, 4, 1), 1, cfg, Baseline{}, 0), ValidationError);
  cfg = AttributionConfig{};
  cfg.noise_sigma = -1.0;
  EXPECT_THROW(attribute(random_model(1), random_matrix(4, 4, 1), 1, cfg, Baseline{}, 0), ValidationError);
}

}  // namespace
}  // namespace pdsm
