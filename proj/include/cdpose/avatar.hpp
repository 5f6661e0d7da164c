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

#ifndef CDPOSE_AVATAR_HPP_
#define CDPOSE_AVATAR_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cdpose/sampler.hpp"

namespace cdpose
{

/// Region codes of the segmentation mask.
enum class Region : std::uint8_t
{
  kBackground = 0,
  kHeadNeck = 1,
  kHair = 2,
  kClothes = 3,
  kSkin = 4,
  kUpperLip = 5,
  kLowerLip = 6,
};

inline constexpr std::uint8_t kMaxRegionCode = 6;

struct Point2
{
  double x = 0.0;
  double y = 0.0;
};

/// Figure proportions in pixels. Defaults describe a 480x640 frontal canvas.
struct FigureParams
{
  int image_w = 480;
  int image_h = 640;
  double trunk_width = 150.0;
  double trunk_height = 200.0;
  double neck_length = 80.0;
  double head_radius_x = 42.0;
  double head_radius_y = 54.0;
  double shoulder_y = 400.0;
  /// Subject's left elbow appears on the image right.
  Point2 elbow_left = {315.0, 530.0};
  Point2 elbow_right = {165.0, 535.0};
  std::uint64_t appearance_seed = 0;
  /// Relative half-range of the per-seed proportion jitter.
  double jitter = 0.15;

  /// Throws InvalidArgument when dimensions are not positive or the figure
  /// cannot fit the canvas for composed roll up to 50° and shift up to 1.
  void validate() const;
};

/// Proportions after applying the appearance jitter.
struct FigureGeometry
{
  int image_w = 0;
  int image_h = 0;
  double midline_x = 0.0;
  double shoulder_y = 0.0;
  double trunk_width = 0.0;
  double trunk_height = 0.0;
  double neck_length = 0.0;
  double neck_width = 0.0;
  double head_radius_x = 0.0;
  double head_radius_y = 0.0;
  /// Distance from the neck tip to the head ellipse center.
  double head_offset = 0.0;
  Point2 elbow_left;
  Point2 elbow_right;
};

FigureGeometry resolve_geometry(const FigureParams & params);

struct Keypoints
{
  std::optional<Point2> elbow_left;
  std::optional<Point2> elbow_right;
  Point2 head_center;
  double trunk_midline_x = 0.0;
};

struct LabeledMask
{
  int width = 0;
  int height = 0;
  /// Row-major region codes.
  std::vector<std::uint8_t> labels;
  Keypoints keypoints;
  GroundTruthLabel truth;

  std::uint8_t at(int x, int y) const {return labels[static_cast<std::size_t>(y) * width + x];}
};

/// Posed 2D figure: where each rigid part sits in image coordinates
/// (x right, y down, pixel centers at +0.5).
struct FigurePose
{
  FigureGeometry geometry;
  Point2 shoulder;
  Point2 neck_tip;
  Point2 head_center;
  /// In-plane rotation of neck and head in degrees; positive tilts the top
  /// toward the image left (the subject's right).
  double neck_angle_deg = 0.0;
  double head_angle_deg = 0.0;
  /// Lip block center in head coordinates and its half extents.
  Point2 lip_center_local;
  double lip_half_w = 0.0;
  double lip_half_h = 0.0;
};

FigurePose pose_figure(const GroundTruthLabel & label, const FigureParams & params);

/// Closed-form centroid of the head-neck and hair regions (labels 1 and 2):
/// the head ellipse minus the lip block.
Point2 analytic_head_centroid(const FigurePose & pose);

/// Rasterizes the figure. Throws OutOfFrame if any part leaves the canvas.
LabeledMask render_mask(const GroundTruthLabel & label, const FigureParams & params);

/// Horizontal displacement of the head centroid from the trunk midline in
/// pixels, computed from the kinematic chain without rasterizing.
double analytic_head_offset(const GroundTruthLabel & label, const FigureParams & params);

/// Centroid of all pixels carrying one of `codes`; nullopt if none.
std::optional<Point2> region_centroid(
  const LabeledMask & mask, std::initializer_list<Region> codes);

/// Appearance seed for scene `index` derived from a base seed.
std::uint64_t scene_appearance_seed(std::uint64_t base_seed, std::uint64_t index);

}  // namespace cdpose

#endif  // CDPOSE_AVATAR_HPP_
