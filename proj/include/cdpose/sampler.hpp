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

#ifndef CDPOSE_SAMPLER_HPP_
#define CDPOSE_SAMPLER_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cdpose/rotation.hpp"
#include "cdpose/twstrs.hpp"

namespace cdpose
{

/// Col-Cap ground-truth state: head (caput) and neck (collis) rotations plus
/// the normalized lateral-shift parameter.
struct CervicalPose
{
  EulerAngles head;
  EulerAngles neck;
  double shift = 0.0;

  bool valid() const;
  friend bool operator==(const CervicalPose &, const CervicalPose &) = default;
};

enum class ShiftDistribution
{
  kUniform01,
  kFixedList,
};

struct SamplerConfig
{
  double sigma_deg = 10.0;
  /// Probability that an individual angle is held at exactly zero.
  double zero_prob = 0.2;
  ShiftDistribution shift_distribution = ShiftDistribution::kUniform01;
  /// Levels drawn uniformly when shift_distribution is kFixedList.
  std::vector<double> shift_levels = {0.0, 0.25, 0.5, 0.75, 1.0};
  /// Ground-truth lateral shift is labeled present at or above this value.
  double shift_positive_threshold = 0.2;
  std::uint64_t seed = 0;
  std::size_t count = 1;

  /// Throws InvalidArgument.
  void validate() const;
};

struct GroundTruthLabel
{
  CervicalPose pose;
  /// Orientation seen by the camera (shift deltas applied, head on neck).
  EulerAngles composed;
  TwstrsAssessment assessment;
  std::string scene_id;
};

/// Opposing roll at shift = 1.
inline constexpr double kMaxShiftRotationDeg = 12.5;

struct ShiftDeltas
{
  EulerAngles head_delta;
  EulerAngles neck_delta;
};

/// Linear map from the shift parameter to opposing head/neck rolls (neck
/// +12.5°·shift, head −12.5°·shift). Throws OutOfRange outside [0, 1].
ShiftDeltas shift_to_opposing_angles(double shift);

/// Head and neck angles after the shift deltas are added.
struct PosedChain
{
  EulerAngles head;
  EulerAngles neck;
};
PosedChain apply_shift(const CervicalPose & pose);

using Rng = std::mt19937_64;

/// Deterministic 64-bit hash combining a seed with a stream index.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Generator for one scene; depends only on (seed, index).
Rng scene_rng(std::uint64_t seed, std::uint64_t index);

CervicalPose sample_pose(Rng & rng, const SamplerConfig & config);

/// Builds the label for a pose: composes the chain and scores it.
GroundTruthLabel make_label(
  const CervicalPose & pose, std::string scene_id, double shift_positive_threshold);

std::string scene_id_for(std::size_t index);

/// Label `index` of the dataset described by `config`.
GroundTruthLabel generate_scene(const SamplerConfig & config, std::size_t index);

std::vector<GroundTruthLabel> generate_dataset(const SamplerConfig & config);

}  // namespace cdpose

#endif  // CDPOSE_SAMPLER_HPP_
