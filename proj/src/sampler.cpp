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

#include "cdpose/sampler.hpp"

#include <cmath>

#include <fmt/format.h>

#include "cdpose/error.hpp"

namespace cdpose
{

namespace
{

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Mixture of an exact zero and a normal truncated to [-bound, bound].
double sample_angle(Rng & rng, const SamplerConfig & config, double bound)
{
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < config.zero_prob) {
    return 0.0;
  }
  std::normal_distribution<double> normal(0.0, config.sigma_deg);
  for (;;) {
    const double x = normal(rng);
    if (std::abs(x) <= bound) {
      return x;
    }
  }
}

EulerAngles sample_angles(Rng & rng, const SamplerConfig & config)
{
  EulerAngles e;
  e.yaw = sample_angle(rng, config, 180.0);
  e.pitch = sample_angle(rng, config, 90.0);
  e.roll = sample_angle(rng, config, 180.0);
  return e;
}

EulerAngles operator+(const EulerAngles & a, const EulerAngles & b)
{
  return {a.yaw + b.yaw, a.pitch + b.pitch, a.roll + b.roll};
}

}  // namespace

bool CervicalPose::valid() const
{
  return head.in_range() && neck.in_range() && shift >= 0.0 && shift <= 1.0;
}

void SamplerConfig::validate() const
{
  if (!(sigma_deg > 0.0) || !std::isfinite(sigma_deg)) {
    throw Error(ErrorCode::kInvalidArgument, "sigma_deg must be positive");
  }
  if (!(zero_prob >= 0.0 && zero_prob <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "zero_prob must lie in [0, 1]");
  }
  if (count < 1) {
    throw Error(ErrorCode::kInvalidArgument, "count must be at least 1");
  }
  if (shift_distribution == ShiftDistribution::kFixedList) {
    if (shift_levels.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "fixed_list shift distribution needs levels");
    }
    for (double s : shift_levels) {
      if (!(s >= 0.0 && s <= 1.0)) {
        throw Error(ErrorCode::kInvalidArgument, "shift levels must lie in [0, 1]");
      }
    }
  }
  if (!(shift_positive_threshold >= 0.0 && shift_positive_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "shift_positive_threshold must lie in [0, 1]");
  }
}

ShiftDeltas shift_to_opposing_angles(double shift)
{
  if (!(shift >= 0.0 && shift <= 1.0)) {
    throw Error(ErrorCode::kOutOfRange, fmt::format("shift {} outside [0, 1]", shift));
  }
  ShiftDeltas d;
  d.neck_delta.roll = kMaxShiftRotationDeg * shift;
  d.head_delta.roll = -kMaxShiftRotationDeg * shift;
  return d;
}

PosedChain apply_shift(const CervicalPose & pose)
{
  const ShiftDeltas d = shift_to_opposing_angles(pose.shift);
  return {pose.head + d.head_delta, pose.neck + d.neck_delta};
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
{
  return splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

Rng scene_rng(std::uint64_t seed, std::uint64_t index)
{
  return Rng(mix_seed(seed, index));
}

CervicalPose sample_pose(Rng & rng, const SamplerConfig & config)
{
  CervicalPose pose;
  pose.head = sample_angles(rng, config);
  pose.neck = sample_angles(rng, config);
  if (config.shift_distribution == ShiftDistribution::kUniform01) {
    pose.shift = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, config.shift_levels.size() - 1);
    pose.shift = config.shift_levels[pick(rng)];
  }
  return pose;
}

GroundTruthLabel make_label(
  const CervicalPose & pose, std::string scene_id, double shift_positive_threshold)
{
  const PosedChain chain = apply_shift(pose);
  GroundTruthLabel label;
  label.pose = pose;
  label.composed = compose_head_neck(chain.head, chain.neck);
  label.assessment = angles_to_twstrs(label.composed, pose.shift >= shift_positive_threshold);
  label.assessment.source_shift = pose.shift;
  label.scene_id = std::move(scene_id);
  return label;
}

std::string scene_id_for(std::size_t index)
{
  return fmt::format("scene-{:06d}", index);
}

GroundTruthLabel generate_scene(const SamplerConfig & config, std::size_t index)
{
  Rng rng = scene_rng(config.seed, index);
  return make_label(sample_pose(rng, config), scene_id_for(index),
    config.shift_positive_threshold);
}

std::vector<GroundTruthLabel> generate_dataset(const SamplerConfig & config)
{
  config.validate();
  std::vector<GroundTruthLabel> out;
  out.reserve(config.count);
  for (std::size_t i = 0; i < config.count; ++i) {
    out.push_back(generate_scene(config, i));
  }
  return out;
}

}  // namespace cdpose
