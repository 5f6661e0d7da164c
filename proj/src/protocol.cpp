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

#include "cdpose/protocol.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cdpose/error.hpp"

namespace cdpose
{

namespace
{

struct Step
{
  TaskKind kind;
  const char * name;
  int seconds;
};

constexpr std::array<Step, 22> kProtocol = {{
  {TaskKind::kPreparation, "preparation", 7},
  {TaskKind::kInstruction, "instruction-1", 9},
  {TaskKind::kEyesOpen, "eyes-open", 6},
  {TaskKind::kInstruction, "instruction-2", 12},
  {TaskKind::kEyesClosed, "eyes-closed", 10},
  {TaskKind::kInstruction, "instruction-3", 21},
  {TaskKind::kNeutral, "neutral-midline", 60},
  {TaskKind::kInstruction, "instruction-4", 9},
  {TaskKind::kHeadRight, "head-right", 7},
  {TaskKind::kInstruction, "instruction-5", 12},
  {TaskKind::kHeadLeft, "head-left", 7},
  {TaskKind::kInstruction, "instruction-6", 12},
  {TaskKind::kTiltRight, "tilt-right", 7},
  {TaskKind::kInstruction, "instruction-7", 12},
  {TaskKind::kTiltLeft, "tilt-left", 7},
  {TaskKind::kPositionChange, "position-change", 20},
  {TaskKind::kInstruction, "instruction-8", 8},
  {TaskKind::kSideNeutral, "side-neutral", 10},
  {TaskKind::kInstruction, "instruction-9", 9},
  {TaskKind::kHeadUp, "head-up", 7},
  {TaskKind::kInstruction, "instruction-10", 12},
  {TaskKind::kHeadDown, "head-down", 7},
}};

const TaskSummary * find_kind(std::span<const TaskSummary> s, TaskKind kind)
{
  for (const auto & x : s) {
    if (x.task.kind == kind) {
      return &x;
    }
  }
  return nullptr;
}

double ratio(double a, double b)
{
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  if (lo == 0.0) {
    return hi == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  }
  return hi / lo;
}

}  // namespace

std::string_view to_string(TaskKind kind)
{
  switch (kind) {
    case TaskKind::kPreparation: return "preparation";
    case TaskKind::kInstruction: return "instruction";
    case TaskKind::kEyesOpen: return "eyes_open";
    case TaskKind::kEyesClosed: return "eyes_closed";
    case TaskKind::kNeutral: return "neutral";
    case TaskKind::kHeadRight: return "head_right";
    case TaskKind::kHeadLeft: return "head_left";
    case TaskKind::kTiltRight: return "tilt_right";
    case TaskKind::kTiltLeft: return "tilt_left";
    case TaskKind::kPositionChange: return "position_change";
    case TaskKind::kSideNeutral: return "side_neutral";
    case TaskKind::kHeadUp: return "head_up";
    case TaskKind::kHeadDown: return "head_down";
  }
  return "unknown";
}

bool ProtocolTask::clinical() const
{
  return kind != TaskKind::kInstruction && kind != TaskKind::kPreparation;
}

bool ProtocolTask::side_view() const
{
  return kind == TaskKind::kSideNeutral || kind == TaskKind::kHeadUp ||
         kind == TaskKind::kHeadDown;
}

std::vector<ProtocolTask> build_timeline()
{
  std::vector<ProtocolTask> out;
  out.reserve(kProtocol.size());
  int t = 0;
  for (const Step & s : kProtocol) {
    out.push_back({s.name, static_cast<double>(t), static_cast<double>(t + s.seconds), s.kind});
    t += s.seconds;
  }
  return out;
}

const ProtocolTask & task_at(std::span<const ProtocolTask> timeline, double t)
{
  if (timeline.empty() || !(t >= timeline.front().start_s) || !(t < timeline.back().end_s)) {
    throw Error(ErrorCode::kOutOfProtocol, fmt::format("t = {} s is outside the protocol", t));
  }
  const auto it = std::upper_bound(timeline.begin(), timeline.end(), t,
      [](double v, const ProtocolTask & task) {return v < task.end_s;});
  return *it;
}

std::vector<TaskSummary> summarize(
  std::span<const FramePrediction> frames, std::span<const ProtocolTask> timeline,
  bool include_nonclinical)
{
  std::vector<std::vector<const FramePrediction *>> buckets(timeline.size());
  for (const auto & f : frames) {
    if (timeline.empty() || f.t < timeline.front().start_s || f.t >= timeline.back().end_s) {
      continue;
    }
    const auto & task = task_at(timeline, f.t);
    buckets[static_cast<std::size_t>(&task - timeline.data())].push_back(&f);
  }

  std::vector<TaskSummary> out;
  for (std::size_t k = 0; k < timeline.size(); ++k) {
    if (!include_nonclinical && !timeline[k].clinical()) {
      continue;
    }
    TaskSummary s;
    s.task = timeline[k];
    const auto & fs = buckets[k];
    s.n_frames = fs.size();
    if (fs.empty()) {
      out.push_back(std::move(s));
      continue;
    }
    auto range_of = [&](auto get) {
        const auto [lo, hi] = std::minmax_element(fs.begin(), fs.end(),
            [&](const FramePrediction * a, const FramePrediction * b) {return get(*a) < get(*b);});
        return get(**hi) - get(**lo);
      };
    s.yaw_range = range_of([](const FramePrediction & f) {return f.euler.yaw;});
    s.roll_range = range_of([](const FramePrediction & f) {return f.euler.roll;});
    s.pitch_range = range_of([](const FramePrediction & f) {return f.euler.pitch;});

    double peak_yaw = 0.0;
    double peak_roll = 0.0;
    double shift_sum = 0.0;
    double mt = 0.0;
    double my = 0.0;
    for (const auto * f : fs) {
      peak_yaw = std::max(peak_yaw, std::abs(f->euler.yaw));
      peak_roll = std::max(peak_roll, std::abs(f->euler.roll));
      shift_sum += f->shift_score;
      mt += f->t;
      my += f->euler.yaw;
    }
    const double n = static_cast<double>(fs.size());
    s.peak_abs_yaw = peak_yaw;
    s.peak_abs_roll = peak_roll;
    s.mean_shift = shift_sum / n;

    mt /= n;
    my /= n;
    double stt = 0.0;
    double sty = 0.0;
    for (const auto * f : fs) {
      stt += (f->t - mt) * (f->t - mt);
      sty += (f->t - mt) * (f->euler.yaw - my);
    }
    if (fs.size() >= 2 && stt > 0.0) {
      s.yaw_drift_slope = sty / stt;
    }
    out.push_back(std::move(s));
  }
  return out;
}

Asymmetry asymmetry(std::span<const TaskSummary> summaries)
{
  auto need = [&](TaskKind kind) {
      const TaskSummary * s = find_kind(summaries, kind);
      if (s == nullptr || s->n_frames < 2) {
        throw Error(ErrorCode::kMissingTask,
          fmt::format("task {} needs at least two frames", to_string(kind)));
      }
      return s;
    };
  const TaskSummary * right = need(TaskKind::kHeadRight);
  const TaskSummary * left = need(TaskKind::kHeadLeft);
  const TaskSummary * tilt_r = need(TaskKind::kTiltRight);
  const TaskSummary * tilt_l = need(TaskKind::kTiltLeft);
  Asymmetry a;
  a.rotation_ratio = ratio(*right->peak_abs_yaw, *left->peak_abs_yaw);
  a.tilt_ratio = ratio(*tilt_r->peak_abs_roll, *tilt_l->peak_abs_roll);
  return a;
}

std::vector<FramePrediction> read_frames_jsonl(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot read " + path.string());
  }
  std::vector<FramePrediction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    FramePrediction f;
    try {
      const auto j = nlohmann::json::parse(line);
      f.t = j.at("t").get<double>();
      f.euler = {j.at("yaw").get<double>(), j.at("pitch").get<double>(),
        j.at("roll").get<double>()};
      f.shift_score = j.at("shift").get<double>();
    } catch (const nlohmann::json::exception & e) {
      throw Error(ErrorCode::kParseError, fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
    if (!(f.t >= 0.0)) {
      throw Error(ErrorCode::kParseError,
        fmt::format("{}:{}: negative timestamp {}", path.string(), line_no, f.t));
    }
    if (!out.empty() && f.t < out.back().t) {
      throw Error(ErrorCode::kParseError,
        fmt::format("{}:{}: frames not sorted, t = {} follows t = {}", path.string(), line_no,
        f.t, out.back().t));
    }
    out.push_back(f);
  }
  return out;
}

}  // namespace cdpose
