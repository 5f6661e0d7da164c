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

#ifndef CDPOSE_PROTOCOL_HPP_
#define CDPOSE_PROTOCOL_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cdpose/rotation.hpp"

namespace cdpose
{

enum class TaskKind
{
  kPreparation,
  kInstruction,
  kEyesOpen,
  kEyesClosed,
  kNeutral,
  kHeadRight,
  kHeadLeft,
  kTiltRight,
  kTiltLeft,
  kPositionChange,
  kSideNeutral,
  kHeadUp,
  kHeadDown,
};

std::string_view to_string(TaskKind kind);

struct ProtocolTask
{
  std::string name;
  double start_s = 0.0;
  double end_s = 0.0;
  TaskKind kind = TaskKind::kInstruction;

  /// Preparation and instruction segments carry no clinical content.
  bool clinical() const;
  /// Profile-view tasks: frontal pose estimates, pitch especially, are unreliable.
  bool side_view() const;
  double duration() const {return end_s - start_s;}
};

/// Total length of the guided recording in seconds.
inline constexpr double kProtocolDurationS = 271.0;

/// The fixed guided-video protocol as half-open tiles [start, end) covering
/// [0, 271) s.
std::vector<ProtocolTask> build_timeline();

/// Tile containing t. Throws OutOfProtocol for t outside [0, total).
const ProtocolTask & task_at(std::span<const ProtocolTask> timeline, double t);

struct FramePrediction
{
  double t = 0.0;
  EulerAngles euler;
  double shift_score = 0.0;
};

struct TaskSummary
{
  ProtocolTask task;
  std::size_t n_frames = 0;
  std::optional<double> yaw_range;
  std::optional<double> roll_range;
  std::optional<double> pitch_range;
  /// OLS slope of yaw over time, degrees per second.
  std::optional<double> yaw_drift_slope;
  std::optional<double> mean_shift;
  std::optional<double> peak_abs_yaw;
  std::optional<double> peak_abs_roll;
};

/// Per-task analytics. Frames are assigned to tiles by timestamp alone;
/// frames at or beyond the end of the protocol are ignored. Non-clinical
/// tiles are dropped unless `include_nonclinical`.
std::vector<TaskSummary> summarize(
  std::span<const FramePrediction> frames, std::span<const ProtocolTask> timeline,
  bool include_nonclinical = false);

struct Asymmetry
{
  /// Larger over smaller peak |yaw| of head-right vs head-left.
  double rotation_ratio = 1.0;
  /// Larger over smaller peak |roll| of tilt-right vs tilt-left.
  double tilt_ratio = 1.0;
};

/// Throws MissingTask unless all four lateral tasks have at least two frames.
Asymmetry asymmetry(std::span<const TaskSummary> summaries);

/// JSON lines {t, yaw, pitch, roll, shift}. Throws ParseError with the line
/// number, including for the first timestamp that goes backwards.
std::vector<FramePrediction> read_frames_jsonl(const std::filesystem::path & path);

}  // namespace cdpose

#endif  // CDPOSE_PROTOCOL_HPP_
