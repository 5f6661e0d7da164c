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

#include "cdpose/report.hpp"

#include <cmath>
#include <string>

namespace cdpose
{

nlohmann::json number_or_null(std::optional<double> v)
{
  if (!v || !std::isfinite(*v)) {
    return nullptr;
  }
  return *v;
}

nlohmann::json agreement_json(TwstrsItem item, const AgreementResult & r)
{
  return {
    {"item", std::string(to_string(item))},
    {"alpha", r.alpha},
    {"ci", {r.ci_low, r.ci_high}},
    {"metric", std::string(to_string(r.metric))},
    {"n_iter", r.n_bootstrap},
    {"seed", r.seed},
  };
}

nlohmann::json snapshot_json(const AgreementSnapshot & snap)
{
  nlohmann::json cells = nlohmann::json::array();
  for (const auto & c : snap.cells) {
    nlohmann::json j;
    if (c.result) {
      j = agreement_json(c.item, *c.result);
    } else {
      j["item"] = std::string(to_string(c.item));
      j["metric"] = std::string(to_string(default_metric(c.item)));
      j["error"] = c.error;
    }
    j["image_kind"] = c.kind ? std::string(to_string(*c.kind)) : std::string("all");
    j["n_ratings"] = c.n_ratings;
    cells.push_back(std::move(j));
  }
  nlohmann::json hist = nlohmann::json::object();
  for (const auto & [count, images] : snap.ratings_per_image_histogram) {
    hist[std::to_string(count)] = images;
  }
  return {{"cells", cells}, {"ratings_per_image_histogram", hist},
    {"total_ratings", snap.total_ratings}};
}

nlohmann::json summary_json(const TaskSummary & s)
{
  nlohmann::json j;
  j["task"] = s.task.name;
  j["kind"] = std::string(to_string(s.task.kind));
  j["start_s"] = s.task.start_s;
  j["end_s"] = s.task.end_s;
  j["clinical"] = s.task.clinical();
  j["side_view_caveat"] = s.task.side_view();
  j["n_frames"] = s.n_frames;
  j["yaw_range"] = number_or_null(s.yaw_range);
  j["roll_range"] = number_or_null(s.roll_range);
  j["pitch_range"] = number_or_null(s.pitch_range);
  j["yaw_drift_slope"] = number_or_null(s.yaw_drift_slope);
  j["mean_shift"] = number_or_null(s.mean_shift);
  j["peak_abs_yaw"] = number_or_null(s.peak_abs_yaw);
  j["peak_abs_roll"] = number_or_null(s.peak_abs_roll);
  return j;
}

nlohmann::json summaries_json(std::span<const TaskSummary> summaries)
{
  nlohmann::json arr = nlohmann::json::array();
  for (const auto & s : summaries) {
    arr.push_back(summary_json(s));
  }
  return arr;
}

nlohmann::json metrics_json(const ClassificationMetrics & m)
{
  return {
    {"tpr", number_or_null(m.tpr)},
    {"accuracy", m.accuracy},
    {"tp", m.tp},
    {"tn", m.tn},
    {"fp", m.fp},
    {"fn", m.fn},
  };
}

}  // namespace cdpose
