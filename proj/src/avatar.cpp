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

#include "cdpose/avatar.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "cdpose/error.hpp"

namespace cdpose
{

namespace
{

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Fractions of the head radii.
constexpr double kHeadAttach = 0.85;
constexpr double kHairLine = -0.45;
constexpr double kLipYawSwing = 0.35;
constexpr double kLipRow = 0.40;
constexpr double kLipPitchSwing = 0.20;
constexpr double kLipHalfWidth = 0.20;
constexpr double kLipHalfHeight = 0.08;
constexpr double kNeckWidth = 0.70;

// In-plane rotation: head-local (x right, y down) to image offsets. Positive
// angles tilt the local up axis (0, -1) toward the image left.
struct Rot2
{
  double c;
  double s;

  explicit Rot2(double deg) : c(std::cos(deg * kDegToRad)), s(std::sin(deg * kDegToRad)) {}

  Point2 apply(double lx, double ly) const {return {c * lx + s * ly, -s * lx + c * ly};}
  Point2 inverse(double dx, double dy) const {return {c * dx - s * dy, s * dx + c * dy};}
};

struct Box
{
  double x0;
  double y0;
  double x1;
  double y1;
};

bool inside(const Box & b, int w, int h)
{
  return b.x0 >= 0.0 && b.y0 >= 0.0 && b.x1 <= w && b.y1 <= h;
}

Box ellipse_box(const Point2 & c, double rx, double ry, const Rot2 & r)
{
  const double ex = std::hypot(rx * r.c, ry * r.s);
  const double ey = std::hypot(rx * r.s, ry * r.c);
  return {c.x - ex, c.y - ey, c.x + ex, c.y + ey};
}

Box segment_box(const Point2 & a, const Point2 & b, double half_width)
{
  return {std::min(a.x, b.x) - half_width, std::min(a.y, b.y) - half_width,
    std::max(a.x, b.x) + half_width, std::max(a.y, b.y) + half_width};
}

// Pixel rows/cols whose centers may fall inside `b`.
void pixel_range(const Box & b, int w, int h, int & i0, int & i1, int & j0, int & j1)
{
  i0 = std::max(0, static_cast<int>(std::floor(b.x0 - 0.5)));
  i1 = std::min(w - 1, static_cast<int>(std::ceil(b.x1 - 0.5)));
  j0 = std::max(0, static_cast<int>(std::floor(b.y0 - 0.5)));
  j1 = std::min(h - 1, static_cast<int>(std::ceil(b.y1 - 0.5)));
}

bool point_inside(const Point2 & p, int w, int h)
{
  return p.x >= 0.0 && p.y >= 0.0 && p.x <= w && p.y <= h;
}

}  // namespace

void FigureParams::validate() const
{
  if (image_w <= 0 || image_h <= 0 || !(trunk_width > 0) || !(trunk_height > 0) ||
    !(neck_length > 0) || !(head_radius_x > 0) || !(head_radius_y > 0) || !(shoulder_y > 0))
  {
    throw Error(ErrorCode::kInvalidArgument, "figure dimensions must be positive");
  }
  if (!(jitter >= 0.0 && jitter < 0.5)) {
    throw Error(ErrorCode::kInvalidArgument, "jitter must lie in [0, 0.5)");
  }
  // Worst case over jitter: neck rolled by 50° plus the full shift delta,
  // head rolled by 50°.
  const double grow = 1.0 + jitter;
  const double neck = neck_length * grow;
  const double rmax = std::max(head_radius_x, head_radius_y) * grow;
  const double attach = kHeadAttach * head_radius_y * grow;
  const double reach_x = neck * std::sin((50.0 + kMaxShiftRotationDeg) * kDegToRad) +
    attach * std::sin(50.0 * kDegToRad) + rmax;
  const double reach_up = neck + attach + rmax;
  if (reach_x >= image_w / 2.0 || reach_up >= shoulder_y) {
    throw Error(ErrorCode::kInvalidArgument, "head can leave the canvas within the pose range");
  }
  if (shoulder_y + trunk_height * grow > image_h || trunk_width * grow > image_w) {
    throw Error(ErrorCode::kInvalidArgument, "trunk does not fit the canvas");
  }
  for (const Point2 & e : {elbow_left, elbow_right}) {
    if (e.y <= shoulder_y || e.y >= shoulder_y + trunk_height * (1.0 - jitter)) {
      throw Error(ErrorCode::kInvalidArgument, "elbows must lie beside the trunk");
    }
  }
}

FigureGeometry resolve_geometry(const FigureParams & params)
{
  Rng rng(mix_seed(params.appearance_seed, 0xA11CE));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto factor = [&]() {return 1.0 + params.jitter * unit(rng);};

  FigureGeometry g;
  g.image_w = params.image_w;
  g.image_h = params.image_h;
  g.midline_x = params.image_w / 2.0;
  g.shoulder_y = params.shoulder_y;
  const double trunk_f = factor();
  g.trunk_width = params.trunk_width * trunk_f;
  g.trunk_height = params.trunk_height * factor();
  g.neck_length = params.neck_length * factor();
  g.head_radius_x = params.head_radius_x * factor();
  g.head_radius_y = params.head_radius_y * factor();
  g.neck_width = kNeckWidth * g.head_radius_x;
  g.head_offset = kHeadAttach * g.head_radius_y;
  for (auto [src, dst] : {std::pair{&params.elbow_left, &g.elbow_left},
      std::pair{&params.elbow_right, &g.elbow_right}})
  {
    dst->x = g.midline_x + (src->x - g.midline_x) * trunk_f;
    dst->y = g.shoulder_y + (src->y - g.shoulder_y) * factor();
    dst->y = std::min(dst->y, g.shoulder_y + g.trunk_height - 1.0);
  }
  return g;
}

FigurePose pose_figure(const GroundTruthLabel & label, const FigureParams & params)
{
  FigurePose p;
  p.geometry = resolve_geometry(params);
  const FigureGeometry & g = p.geometry;
  const PosedChain chain = apply_shift(label.pose);

  p.neck_angle_deg = chain.neck.roll;
  p.head_angle_deg = chain.neck.roll + chain.head.roll;
  p.shoulder = {g.midline_x, g.shoulder_y};
  const Point2 up_neck = Rot2(p.neck_angle_deg).apply(0.0, -g.neck_length);
  p.neck_tip = {p.shoulder.x + up_neck.x, p.shoulder.y + up_neck.y};
  const Point2 up_head = Rot2(p.head_angle_deg).apply(0.0, -g.head_offset);
  p.head_center = {p.neck_tip.x + up_head.x, p.neck_tip.y + up_head.y};

  // Facing direction moves the mouth: turning slides it sideways, lifting the
  // chin moves it up.
  p.lip_center_local = {
    kLipYawSwing * g.head_radius_x * std::sin(label.composed.yaw * kDegToRad),
    g.head_radius_y * (kLipRow - kLipPitchSwing * std::sin(label.composed.pitch * kDegToRad))};
  p.lip_half_w = kLipHalfWidth * g.head_radius_x;
  p.lip_half_h = kLipHalfHeight * g.head_radius_y;
  return p;
}

Point2 analytic_head_centroid(const FigurePose & pose)
{
  const FigureGeometry & g = pose.geometry;
  const double head_area = std::numbers::pi * g.head_radius_x * g.head_radius_y;
  const double lip_area = 4.0 * pose.lip_half_w * pose.lip_half_h;
  const Point2 lip_off =
    Rot2(pose.head_angle_deg).apply(pose.lip_center_local.x, pose.lip_center_local.y);
  const double rest = head_area - lip_area;
  // Lip block lies strictly inside the ellipse, so area moments subtract.
  return {(head_area * pose.head_center.x - lip_area * (pose.head_center.x + lip_off.x)) / rest,
    (head_area * pose.head_center.y - lip_area * (pose.head_center.y + lip_off.y)) / rest};
}

double analytic_head_offset(const GroundTruthLabel & label, const FigureParams & params)
{
  const FigurePose pose = pose_figure(label, params);
  return analytic_head_centroid(pose).x - pose.geometry.midline_x;
}

LabeledMask render_mask(const GroundTruthLabel & label, const FigureParams & params)
{
  const FigurePose pose = pose_figure(label, params);
  const FigureGeometry & g = pose.geometry;
  const int w = g.image_w;
  const int h = g.image_h;

  const Box trunk{g.midline_x - g.trunk_width / 2.0, g.shoulder_y,
    g.midline_x + g.trunk_width / 2.0, g.shoulder_y + g.trunk_height};
  const Rot2 head_rot(pose.head_angle_deg);
  const Box head = ellipse_box(pose.head_center, g.head_radius_x, g.head_radius_y, head_rot);
  const Box neck = segment_box(pose.shoulder, pose.neck_tip, g.neck_width / 2.0);
  if (!inside(trunk, w, h) || !inside(head, w, h) || !inside(neck, w, h) ||
    !point_inside(g.elbow_left, w, h) || !point_inside(g.elbow_right, w, h))
  {
    throw Error(ErrorCode::kOutOfFrame,
      fmt::format("scene {}: posed figure leaves the {}x{} canvas", label.scene_id, w, h));
  }

  LabeledMask mask;
  mask.width = w;
  mask.height = h;
  mask.labels.assign(static_cast<std::size_t>(w) * h, 0);
  auto put = [&](int i, int j, Region r) {
      mask.labels[static_cast<std::size_t>(j) * w + i] = static_cast<std::uint8_t>(r);
    };

  int i0, i1, j0, j1;
  pixel_range(trunk, w, h, i0, i1, j0, j1);
  for (int j = j0; j <= j1; ++j) {
    const double y = j + 0.5;
    if (y < trunk.y0 || y >= trunk.y1) {continue;}
    for (int i = i0; i <= i1; ++i) {
      const double x = i + 0.5;
      if (x >= trunk.x0 && x < trunk.x1) {put(i, j, Region::kClothes);}
    }
  }

  const double dx = pose.neck_tip.x - pose.shoulder.x;
  const double dy = pose.neck_tip.y - pose.shoulder.y;
  const double len = std::hypot(dx, dy);
  pixel_range(neck, w, h, i0, i1, j0, j1);
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      const double vx = i + 0.5 - pose.shoulder.x;
      const double vy = j + 0.5 - pose.shoulder.y;
      const double along = (vx * dx + vy * dy) / len;
      const double across = (vx * dy - vy * dx) / len;
      if (along >= 0.0 && along <= len && std::abs(across) <= g.neck_width / 2.0) {
        put(i, j, Region::kSkin);
      }
    }
  }

  const double rx = g.head_radius_x;
  const double ry = g.head_radius_y;
  const Point2 lip = pose.lip_center_local;
  pixel_range(head, w, h, i0, i1, j0, j1);
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      const Point2 local = head_rot.inverse(i + 0.5 - pose.head_center.x,
          j + 0.5 - pose.head_center.y);
      const double ex = local.x / rx;
      const double ey = local.y / ry;
      if (ex * ex + ey * ey > 1.0) {continue;}
      if (std::abs(local.x - lip.x) <= pose.lip_half_w &&
        std::abs(local.y - lip.y) <= pose.lip_half_h)
      {
        put(i, j, local.y < lip.y ? Region::kUpperLip : Region::kLowerLip);
      } else if (local.y < kHairLine * ry) {
        put(i, j, Region::kHair);
      } else {
        put(i, j, Region::kHeadNeck);
      }
    }
  }

  mask.keypoints.elbow_left = g.elbow_left;
  mask.keypoints.elbow_right = g.elbow_right;
  mask.keypoints.head_center = analytic_head_centroid(pose);
  mask.keypoints.trunk_midline_x = g.midline_x;
  mask.truth = label;
  return mask;
}

std::optional<Point2> region_centroid(
  const LabeledMask & mask, std::initializer_list<Region> codes)
{
  bool wanted[kMaxRegionCode + 1] = {};
  for (Region r : codes) {
    wanted[static_cast<std::uint8_t>(r)] = true;
  }
  double sx = 0.0;
  double sy = 0.0;
  std::size_t n = 0;
  for (int j = 0; j < mask.height; ++j) {
    for (int i = 0; i < mask.width; ++i) {
      const std::uint8_t v = mask.at(i, j);
      if (v <= kMaxRegionCode && wanted[v]) {
        sx += i + 0.5;
        sy += j + 0.5;
        ++n;
      }
    }
  }
  if (n == 0) {
    return std::nullopt;
  }
  return Point2{sx / n, sy / n};
}

std::uint64_t scene_appearance_seed(std::uint64_t base_seed, std::uint64_t index)
{
  return mix_seed(base_seed ^ 0x5EEDA99EA7A11CEULL, index);
}

}  // namespace cdpose
