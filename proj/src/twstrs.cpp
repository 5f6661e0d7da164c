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

#include "cdpose/twstrs.hpp"

#include <cmath>
#include <string>

#include "cdpose/error.hpp"

namespace cdpose
{

std::string_view to_string(TwstrsItem item)
{
  switch (item) {
    case TwstrsItem::kTorticollis: return "torticollis";
    case TwstrsItem::kLaterocollis: return "laterocollis";
    case TwstrsItem::kAnteroRetrocollis: return "antero_retrocollis";
    case TwstrsItem::kLateralShift: return "lateral_shift";
  }
  return "unknown";
}

TwstrsItem parse_item(std::string_view name)
{
  for (TwstrsItem item : kAllItems) {
    if (to_string(item) == name) {
      return item;
    }
  }
  throw Error(ErrorCode::kParseError, "unknown TWSTRS item '" + std::string(name) + "'");
}

int max_score(TwstrsItem item)
{
  switch (item) {
    case TwstrsItem::kTorticollis: return 4;
    case TwstrsItem::kLaterocollis: return 3;
    case TwstrsItem::kAnteroRetrocollis: return 3;
    case TwstrsItem::kLateralShift: return 1;
  }
  return 0;
}

std::string_view to_string(AnteroRetroDirection d)
{
  switch (d) {
    case AnteroRetroDirection::kNone: return "none";
    case AnteroRetroDirection::kAnterocollis: return "anterocollis";
    case AnteroRetroDirection::kRetrocollis: return "retrocollis";
  }
  return "none";
}

AnteroRetroDirection parse_direction(std::string_view name)
{
  if (name == "none") {return AnteroRetroDirection::kNone;}
  if (name == "anterocollis") {return AnteroRetroDirection::kAnterocollis;}
  if (name == "retrocollis") {return AnteroRetroDirection::kRetrocollis;}
  throw Error(ErrorCode::kParseError, "unknown direction '" + std::string(name) + "'");
}

int TwstrsAssessment::score(TwstrsItem item) const
{
  switch (item) {
    case TwstrsItem::kTorticollis: return torticollis;
    case TwstrsItem::kLaterocollis: return laterocollis;
    case TwstrsItem::kAnteroRetrocollis: return antero_retrocollis;
    case TwstrsItem::kLateralShift: return lateral_shift;
  }
  return 0;
}

bool TwstrsAssessment::valid() const
{
  for (TwstrsItem item : kAllItems) {
    const int s = score(item);
    if (s < 0 || s > max_score(item)) {
      return false;
    }
  }
  return (antero_retro_direction == AnteroRetroDirection::kNone) == (antero_retrocollis == 0);
}

int torticollis_score(double abs_yaw_deg)
{
  if (abs_yaw_deg < kDetectionThresholdDeg) {return 0;}
  if (abs_yaw_deg < 23.0) {return 1;}
  if (abs_yaw_deg < 46.0) {return 2;}
  if (abs_yaw_deg < 68.0) {return 3;}
  return 4;
}

int tilt_score(double abs_angle_deg)
{
  if (abs_angle_deg < kDetectionThresholdDeg) {return 0;}
  if (abs_angle_deg < 16.0) {return 1;}
  if (abs_angle_deg < 36.0) {return 2;}
  return 3;
}

TwstrsAssessment angles_to_twstrs(const EulerAngles & e, bool shift_detected)
{
  TwstrsAssessment a;
  a.torticollis = torticollis_score(std::abs(e.yaw));
  a.laterocollis = tilt_score(std::abs(e.roll));
  a.antero_retrocollis = tilt_score(std::abs(e.pitch));
  if (a.antero_retrocollis > 0) {
    a.antero_retro_direction = e.pitch > 0 ? AnteroRetroDirection::kRetrocollis :
      AnteroRetroDirection::kAnterocollis;
  }
  a.lateral_shift = shift_detected ? 1 : 0;
  a.source_angles = e;
  return a;
}

}  // namespace cdpose
