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

#include <algorithm>
#include <cmath>
#include <vector>

#include "pdsm/model.hpp"
#include "pdsm/model_io.hpp"
#include "test_util.hpp"

namespace pdsm {
namespace {

using testing::random_matrix;
using testing::random_model;

double max_abs(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

// max |analytic - numeric| / max |numeric| with central differences.
double input_fd_error(const ToyClassifier& m, const Matrix& x, std::size_t c, double h = 1e-5) {
  const Matrix g = input_gradient(m, x, c);
  std::vector<double> num(x.size()), diff(x.size());
  Matrix xp = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = xp.values()[i];
    xp.values()[i] = v + h;
    const double up = forward(m, xp)[c];
    xp.values()[i] = v - h;
    const double dn = forward(m, xp)[c];
    xp.values()[i] = v;
    num[i] = (up - dn) / (2 * h);
    diff[i] = g.values()[i] - num[i];
  }
  return max_abs(diff) / max_abs(num);
}

TEST(Model, ParameterLayout) {
  EXPECT_EQ(ToyClassifier::kNumParams, 8u * 9 + 8 + 16u * 72 + 16 + 2u * 16 + 2);
}

TEST(Model, ZeroHeadGivesHalfHalf) {
  ToyClassifier m = random_model(1);
  std::fill(m.head_w().begin(), m.head_w().end(), 0.0);
  std::fill(m.head_b().begin(), m.head_b().end(), 0.0);
  const auto p = forward(m, random_matrix(8, 8, 2));
  EXPECT_EQ(p[0], 0.5);
  EXPECT_EQ(p[1], 0.5);
}

TEST(Model, ProbabilitiesSumToOneAndAreDeterministic) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const ToyClassifier m = random_model(s, 1.0);
    const Matrix x = random_matrix(4 + s % 9, 4 + s % 13, 100 + s, 0.0, 5.0);
    const auto p = forward(m, x);
    EXPECT_NEAR(p[0] + p[1], 1.0, 1e-12);
    EXPECT_GE(p[0], 0.0);
    EXPECT_LE(p[1], 1.0);
    EXPECT_EQ(forward(m, x), p);
  }
}

TEST(Model, RejectsSmallOrNonFiniteInput) {
  const ToyClassifier m = random_model(1);
  EXPECT_THROW(forward(m, Matrix(3, 8)), ValidationError);
  Matrix x(4, 4, 0.0);
  x(1, 1) = std::nan("");
  EXPECT_THROW(forward(m, x), ValidationError);
}

TEST(Model, OddSizesAreSupported) {
  const ToyClassifier m = random_model(3);
  for (std::size_t h : {4u, 5u, 7u, 9u})
    for (std::size_t w : {4u, 6u, 11u}) {
      const Matrix x = random_matrix(h, w, h * 31 + w);
      const Matrix g = input_gradient(m, x, 1);
      EXPECT_EQ(g.rows(), h);
      EXPECT_EQ(g.cols(), w);
      EXPECT_LT(input_fd_error(m, x, 1), 1e-4);
    }
}

TEST(Model, ZeroConvWeightsGiveZeroGradient) {
  ToyClassifier m = random_model(4);
  std::fill(m.conv1_w().begin(), m.conv1_w().end(), 0.0);
  const Matrix g = input_gradient(m, random_matrix(8, 8, 5), 1);
  for (double v : g.values()) EXPECT_EQ(v, 0.0);
}

TEST(Model, ClassGradientsAreComplementary) {
  const ToyClassifier m = random_model(6);
  const Matrix x = random_matrix(8, 12, 7);
  const Matrix g0 = input_gradient(m, x, 0), g1 = input_gradient(m, x, 1);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(g0.values()[i], -g1.values()[i], 1e-15);
}

TEST(Model, InputGradientMatchesFiniteDifferences) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const ToyClassifier m = random_model(10 + s);
    for (std::uint64_t i = 0; i < 3; ++i) {
      const Matrix x = random_matrix(8, 10, 1000 * s + i);
      EXPECT_LT(input_fd_error(m, x, i % 2), 1e-4) << "model " << s << " input " << i;
    }
  }
}

TEST(Model, ParameterGradientMatchesFiniteDifferences) {
  ToyClassifier m = random_model(21);
  const Matrix x = random_matrix(8, 8, 22);
  const std::size_t label = 1;
  auto loss = [&](const ToyClassifier& mm) { return -std::log(forward(mm, x)[label]); };
  const Activations a = forward_cached(m, x);
  std::array<double, kNumClasses> dlogits{};
  for (std::size_t k = 0; k < kNumClasses; ++k) dlogits[k] = a.probs[k] - (k == label ? 1.0 : 0.0);
  std::vector<double> g(ToyClassifier::kNumParams, 0.0);
  backward(m, x, a, dlogits, ReluRule::gradient, nullptr, nullptr, g);

  std::vector<double> num(ToyClassifier::kNumParams), diff(ToyClassifier::kNumParams);
  const double h = 1e-6;
  for (std::size_t p = 0; p < ToyClassifier::kNumParams; ++p) {
    const double v = m.params()[p];
    m.params()[p] = v + h;
    const double up = loss(m);
    m.params()[p] = v - h;
    const double dn = loss(m);
    m.params()[p] = v;
    num[p] = (up - dn) / (2 * h);
    diff[p] = g[p] - num[p];
  }
  EXPECT_LT(max_abs(diff) / max_abs(num), 1e-4);
}

TEST(Model, GuidedEqualsGradientWhenNothingIsClipped) {
  ToyClassifier m;
  Rng rng(8);
  for (double& w : m.conv1_w()) w = rng.uniform(0.1, 0.5);
  for (double& w : m.conv1_b()) w = rng.uniform(0.1, 0.5);
  for (double& w : m.conv2_w()) w = rng.uniform(0.01, 0.05);
  for (double& w : m.conv2_b()) w = rng.uniform(0.1, 0.5);
  for (std::size_t c = 0; c < ToyClassifier::kC2; ++c) {
    m.head_w()[c] = rng.uniform(-0.5, 0.0);
    m.head_w()[ToyClassifier::kC2 + c] = rng.uniform(0.1, 0.5);
  }
  const Matrix x = random_matrix(8, 8, 9, 0.1, 1.0);
  EXPECT_EQ(input_gradient(m, x, 1, ReluRule::guided), input_gradient(m, x, 1));
}

TEST(ModelIo, RoundTripPreservesParametersAndHash) {
  const ToyClassifier m = random_model(30);
  const auto dir = testing::scratch_dir("model_io");
  save_model(m, dir, {{"note", "x"}});
  const ToyClassifier back = load_model(dir);
  EXPECT_EQ(back, m);
  EXPECT_EQ(back.hash(), m.hash());
  EXPECT_EQ(load_matrix(dir / "conv2_weight.npy").cols(), 72u);
  EXPECT_EQ(load_npy(dir / "head_bias.npy").shape, (std::vector<std::size_t>{2}));
}

TEST(ModelIo, SavingTwiceIsByteIdentical) {
  const ToyClassifier m = random_model(31);
  const auto a = testing::scratch_dir("model_io_a"), b = testing::scratch_dir("model_io_b");
  save_model(m, a);
  save_model(m, b);
  for (const char* f : {"model.json", "conv1_weight.npy", "conv2_weight.npy", "head_weight.npy"})
    EXPECT_EQ(read_file_bytes(a / f), read_file_bytes(b / f)) << f;
}

TEST(ModelIo, TamperedTensorFailsHashCheck) {
  const ToyClassifier m = random_model(32);
  const auto dir = testing::scratch_dir("model_io_tamper");
  save_model(m, dir);
  std::vector<double> bias(m.head_b().begin(), m.head_b().end());
  bias[0] += 1.0;
  save_vector(bias, dir / "head_bias.npy");
  EXPECT_THROW(load_model(dir), ValidationError);
  EXPECT_THROW(load_model(dir / "missing"), IoError);
}

}  // namespace
}  // namespace pdsm
