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

#ifndef CDPOSE_TWSTRS_HPP_
#define CDPOSE_TWSTRS_HPP_

#include <array>
#include <optional>
#include <string_view>

#include "cdpose/rotation.hpp"

namespace cdpose
{

/// Static postural TWSTRS items estimated from frontal images.
enum class TwstrsItem
{
  kTorticollis,
  kLaterocollis,
  kAnteroRetrocollis,
  kLateralShift,
};

inline constexpr std::array<TwstrsItem, 4> kAllItems = {
  TwstrsItem::kTorticollis, TwstrsItem::kLaterocollis,
  TwstrsItem::kAnteroRetrocollis, TwstrsItem::kLateralShift};

std::string_view to_string(TwstrsItem item);
/// Throws ParseError on an unknown name.
TwstrsItem parse_item(std::string_view name);
/// Highest legal ordinal for the item (4 for torticollis, 3 for the tilt
/// items, 1 for lateral shift).
int max_score(TwstrsItem item);

enum class AnteroRetroDirection
{
  kNone,
  kAnterocollis,
  kRetrocollis,
};

std::string_view to_string(AnteroRetroDirection d);
AnteroRetroDirection parse_direction(std::string_view name);

struct TwstrsAssessment
{
  int torticollis = 0;
  int laterocollis = 0;
  int antero_retrocollis = 0;
  AnteroRetroDirection antero_retro_direction = AnteroRetroDirection::kNone;
  int lateral_shift = 0;
  std::optional<EulerAngles> source_angles;
  std::optional<double> source_shift;

  int score(TwstrsItem item) const;
  /// Ordinal ranges and the direction/score coupling.
  bool valid() const;

  friend bool operator==(const TwstrsAssessment &, const TwstrsAssessment &) = default;
};

/// Deviations smaller than this are not scored.
inline constexpr double kDetectionThresholdDeg = 5.0;

/// Torticollis score for a yaw magnitude: bins [0,5) [5,23) [23,46) [46,68) [68,∞).
int torticollis_score(double abs_yaw_deg);
/// Laterocollis / antero-retrocollis score: bins [0,5) [5,16) [16,36) [36,∞).
int tilt_score(double abs_angle_deg);

/// Maps a head orientation to the rotational items, each axis thresholded
/// independently. The sign of pitch decides retro- (positive) versus
/// anterocollis (negative); the score itself uses the magnitude.
TwstrsAssessment angles_to_twstrs(const EulerAngles & e, bool shift_detected);

}  // namespace cdpose

#endif  // CDPOSE_TWSTRS_HPP_
