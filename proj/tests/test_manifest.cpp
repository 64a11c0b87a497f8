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

#include <filesystem>

#include "pdsm/manifest.hpp"
#include "pdsm/synthgen.hpp"
#include "test_util.hpp"

namespace pdsm {
namespace {

std::filesystem::path write_small(const std::string& name, bool fake) {
  SynthConfig c;
  c.n_train = 4;
  c.n_test = 2;
  c.bins = 8;
  c.frames_min = 16;
  c.frames_max = 24;
  const auto dir = testing::scratch_dir(name);
  write_dataset(fake ? gen_fake_phoneme_dataset(c) : gen_noise_dataset(c), dir);
  return dir;
}

TEST(Manifest, GeneratedDatasetsValidate) {
  for (bool fake : {false, true}) {
    const auto dir = write_small(fake ? "manifest_fake" : "manifest_noise", fake);
    const DatasetManifest m = read_manifest(dir / "manifest.json");
    EXPECT_EQ(m.task, fake ? "fakephoneme" : "noise");
    EXPECT_EQ(m.entries.size(), 6u);
    EXPECT_NO_THROW(validate_manifest(m));
    EXPECT_EQ(m.split("train").size(), 4u);
    EXPECT_EQ(m.class_of(m.find(m.entries[1].sample_id)), 1u);
  }
}

TEST(Manifest, JsonRoundTrip) {
  const auto dir = write_small("manifest_rt", true);
  const DatasetManifest m = read_manifest(dir / "manifest.json");
  const DatasetManifest back = manifest_from_json(to_json(m));
  EXPECT_EQ(to_json(back), to_json(m));
  EXPECT_EQ(back.entries[1].corrupted_segments, m.entries[1].corrupted_segments);
  EXPECT_EQ(back.entries[1].source, m.entries[0].sample_id);
}

TEST(Manifest, RejectsDuplicateIdsAndWrongFormat) {
  const auto dir = write_small("manifest_dup", false);
  nlohmann::json j = to_json(read_manifest(dir / "manifest.json"));
  nlohmann::json dup = j;
  dup["entries"].push_back(dup["entries"][0]);
  EXPECT_THROW(manifest_from_json(dup), ValidationError);
  nlohmann::json wrong = j;
  wrong["format"] = "other";
  EXPECT_THROW(manifest_from_json(wrong), ValidationError);
  wrong = j;
  wrong.erase("labels");
  EXPECT_THROW(manifest_from_json(wrong), ValidationError);
}

TEST(Manifest, MissingFileFailsValidation) {
  const auto dir = write_small("manifest_missing", false);
  const DatasetManifest m = read_manifest(dir / "manifest.json");
  std::filesystem::remove(dir / m.entries[2].spectrogram);
  EXPECT_THROW(validate_manifest(m), IoError);
}

TEST(Manifest, MalformedFileFailsValidation) {
  const auto dir = write_small("manifest_malformed", false);
  const DatasetManifest m = read_manifest(dir / "manifest.json");
  write_file_bytes(dir / m.entries[0].spectrogram, "not an npy file");
  EXPECT_THROW(validate_manifest(m), FormatError);
}

TEST(Manifest, GroundTruthOutsideSampleFailsValidation) {
  const auto dir = write_small("manifest_window", false);
  DatasetManifest m = read_manifest(dir / "manifest.json");
  m.entries[1].window = FrameWindow{0, 10000};
  EXPECT_THROW(validate_manifest(m), ValidationError);
  m = read_manifest(dir / "manifest.json");
  m.entries[0].label = "unknown";
  EXPECT_THROW(validate_manifest(m), ValidationError);
}

TEST(Manifest, UnparsableJsonIsValidationError) {
  const auto dir = testing::scratch_dir("manifest_json");
  write_file_bytes(dir / "manifest.json", "{ not json");
  EXPECT_THROW(read_manifest(dir / "manifest.json"), ValidationError);
}

}  // namespace
}  // namespace pdsm
