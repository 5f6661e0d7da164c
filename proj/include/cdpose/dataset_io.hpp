// Copyright 2026 The cdpose Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CDPOSE_DATASET_IO_HPP_
#define CDPOSE_DATASET_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cdpose/avatar.hpp"
#include "cdpose/sampler.hpp"

namespace cdpose
{

/// One dataset line, angles with six decimals:
/// {scene_id, head:{yaw,pitch,roll}, neck:{...}, shift, composed:{...},
///  twstrs:{torticollis, laterocollis, antero_retrocollis, direction, lateral_shift}}
std::string label_to_jsonl(const GroundTruthLabel & label);
GroundTruthLabel label_from_json(const nlohmann::json & j);

void write_dataset(const std::filesystem::path & path, const std::vector<GroundTruthLabel> & labels);
/// Throws ParseError with the line number; DuplicateId on repeated scene ids.
std::vector<GroundTruthLabel> read_dataset(const std::filesystem::path & path);

/// Binary PGM (P5, maxval 255) holding region codes 0..6 as gray levels.
void write_pgm(const std::filesystem::path & path, int width, int height,
  const std::vector<std::uint8_t> & pixels);
/// Throws ParseError on a malformed file.
std::vector<std::uint8_t> read_pgm(const std::filesystem::path & path, int & width, int & height);

/// Sidecar manifest entry for a rendered mask.
struct MaskEntry
{
  std::string scene_id;
  std::string file;
  int width = 0;
  int height = 0;
  std::uint64_t appearance_seed = 0;
  Keypoints keypoints;
  GroundTruthLabel truth;
};

std::string mask_entry_to_jsonl(const MaskEntry & e);
std::vector<MaskEntry> read_mask_manifest(const std::filesystem::path & path);

/// Loads the raster referenced by `entry` (relative to `dir`) into a mask.
LabeledMask load_mask(const std::filesystem::path & dir, const MaskEntry & entry);

}  // namespace cdpose

#endif  // CDPOSE_DATASET_IO_HPP_
