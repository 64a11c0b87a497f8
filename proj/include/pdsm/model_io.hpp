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

// Serialized model directory:
//
//   model.json          index: format tag, architecture, tensor table, hash
//   conv1_weight.npy    (8, 9)    f64, [out][ky*3+kx]
//   conv1_bias.npy      (8,)
//   conv2_weight.npy    (16, 72)  f64, [out][in*9 + ky*3+kx]
//   conv2_bias.npy      (16,)
//   head_weight.npy     (2, 16)
//   head_bias.npy       (2,)

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdsm/model.hpp"
#include "pdsm/npy.hpp"

namespace pdsm {

inline constexpr const char* kModelFormat = "pdsm-toy-classifier";

namespace model_io_detail {

struct TensorSpec {
  const char* name;
  const char* file;
  std::size_t offset, rows, cols;  // cols == 0: 1-D tensor of `rows`
};

inline const std::vector<TensorSpec>& tensor_table() {
  using M = ToyClassifier;
  static const std::vector<TensorSpec> t{
      {"conv1.weight", "conv1_weight.npy", M::kConv1W, M::kC1, M::kIn * M::kK},
      {"conv1.bias", "conv1_bias.npy", M::kConv1B, M::kC1, 0},
      {"conv2.weight", "conv2_weight.npy", M::kConv2W, M::kC2, M::kC1 * M::kK},
      {"conv2.bias", "conv2_bias.npy", M::kConv2B, M::kC2, 0},
      {"head.weight", "head_weight.npy", M::kHeadW, kNumClasses, M::kC2},
      {"head.bias", "head_bias.npy", M::kHeadB, kNumClasses, 0},
  };
  return t;
}

}  // namespace model_io_detail

/// Write the model into `dir` (created if needed). `extra` is merged into
/// the index under the "training" key.
inline void save_model(const ToyClassifier& m, const std::filesystem::path& dir,
                       const nlohmann::json& extra = nlohmann::json::object()) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create model directory '" + dir.string() + "': " + ec.message());
  nlohmann::json index;
  index["format"] = kModelFormat;
  index["version"] = 1;
  index["architecture"] = {{"conv_channels", {1, ToyClassifier::kC1, ToyClassifier::kC2}},
                           {"kernel", 3},
                           {"padding", 1},
                           {"pool", "avg2x2"},
                           {"head", "global_mean+affine+softmax"},
                           {"classes", kNumClasses}};
  index["tensors"] = nlohmann::json::array();
  for (const auto& t : model_io_detail::tensor_table()) {
    const std::size_t n = t.cols ? t.rows * t.cols : t.rows;
    std::span<const double> vals = m.params().subspan(t.offset, n);
    std::vector<std::size_t> shape = t.cols ? std::vector<std::size_t>{t.rows, t.cols}
                                            : std::vector<std::size_t>{t.rows};
    write_file_bytes(dir / t.file, encode_npy(vals, shape, Precision::f64));
    index["tensors"].push_back({{"name", t.name}, {"file", t.file}, {"shape", shape}});
  }
  index["hash"] = m.hash();
  index["training"] = extra;
  write_file_bytes(dir / "model.json", index.dump(2) + "\n");
}

inline ToyClassifier load_model(const std::filesystem::path& dir) {
  const auto index = [&] {
    try {
      return nlohmann::json::parse(read_file_bytes(dir / "model.json"));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("model index '" + (dir / "model.json").string() + "': " + e.what());
    }
  }();
  require(index.value("format", "") == kModelFormat, "model index: unexpected format tag");
  ToyClassifier m;
  for (const auto& t : model_io_detail::tensor_table()) {
    const NpyArray a = load_npy(dir / t.file);
    const std::size_t n = t.cols ? t.rows * t.cols : t.rows;
    require(a.values.size() == n, std::string("model tensor ") + t.name + ": wrong element count");
    std::copy(a.values.begin(), a.values.end(), m.params().begin() + static_cast<std::ptrdiff_t>(t.offset));
  }
  if (index.contains("hash"))
    require(index["hash"].get<std::string>() == m.hash(), "model index: parameter hash mismatch");
  return m;
}

}  // namespace pdsm
