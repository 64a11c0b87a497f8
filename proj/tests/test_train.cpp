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

#include "pdsm/model_io.hpp"
#include "pdsm/train.hpp"
#include "test_util.hpp"

namespace pdsm {
namespace {

// Two features per sample: the level of the top half and of the bottom half
// of a 4 x 4 input. Label 1 iff the top half is louder, with a margin.
struct ToySet {
  std::vector<Matrix> inputs;
  std::vector<LabeledInput> data;
};

ToySet separable_set(std::size_t n, std::uint64_t seed) {
  ToySet s;
  Rng rng(seed);
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < n; ++i) {
    double a = rng.uniform(0.0, 1.0), b = rng.uniform(0.0, 1.0);
    if (std::fabs(a - b) < 0.2) b = a < 0.5 ? a + 0.4 : a - 0.4;
    Matrix x(4, 4);
    for (std::size_t f = 0; f < 4; ++f)
      for (std::size_t t = 0; t < 4; ++t) x(f, t) = f < 2 ? a : b;
    s.inputs.push_back(x);
    labels.push_back(a > b ? 1 : 0);
  }
  for (std::size_t i = 0; i < n; ++i) s.data.push_back({&s.inputs[i], labels[i]});
  return s;
}

TEST(Train, SeparableToySetReachesFullAccuracy) {
  const ToySet s = separable_set(64, 5);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.05;
  const TrainResult r = train(s.data, cfg);
  ASSERT_EQ(r.epochs.size(), 50u);
  EXPECT_EQ(accuracy(r.model, s.data), 1.0);
  EXPECT_LT(r.epochs.back().mean_loss, r.epochs.front().mean_loss);
}

TEST(Train, PlainSgdAlsoLearns) {
  const ToySet s = separable_set(64, 6);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.5;
  cfg.optimizer = Optimizer::sgd;
  const TrainResult r = train(s.data, cfg);
  EXPECT_LT(r.epochs.back().mean_loss, r.epochs.front().mean_loss);
}

TEST(Train, SameSeedGivesByteIdenticalModelsForAnyThreadCount) {
  const ToySet s = separable_set(40, 7);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 7;
  const ToyClassifier a = train(s.data, cfg, 1).model;
  const ToyClassifier b = train(s.data, cfg, 1).model;
  const ToyClassifier c = train(s.data, cfg, 4).model;
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  const auto da = testing::scratch_dir("train_a"), db = testing::scratch_dir("train_b");
  save_model(a, da);
  save_model(c, db);
  for (const char* f : {"model.json", "conv1_weight.npy", "conv2_weight.npy", "head_bias.npy"})
    EXPECT_EQ(read_file_bytes(da / f), read_file_bytes(db / f));
  cfg.seed = 2;
  EXPECT_NE(train(s.data, cfg).model, a);
}

TEST(Train, RefusesSingleClassOrEmptyData) {
  ToySet s = separable_set(10, 8);
  for (auto& d : s.data) d.label = 0;
  EXPECT_THROW(train(s.data, TrainConfig{}), ValidationError);
  EXPECT_THROW(train({}, TrainConfig{}), ValidationError);
}

TEST(Train, RejectsBadHyperparameters) {
  const ToySet s = separable_set(10, 9);
  TrainConfig cfg;
  cfg.learning_rate = 0;
  EXPECT_THROW(train(s.data, cfg), ValidationError);
  cfg = TrainConfig{};
  cfg.momentum = 1.0;
  EXPECT_THROW(train(s.data, cfg), ValidationError);
  EXPECT_THROW(parse_optimizer("adam"), ValidationError);
}

}  // namespace
}  // namespace pdsm
