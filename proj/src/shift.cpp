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

#include "cdpose/shift.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cdpose/error.hpp"

namespace cdpose
{

namespace
{

bool is_head_neck(std::uint8_t v)
{
  return v == static_cast<std::uint8_t>(Region::kHeadNeck) ||
         v == static_cast<std::uint8_t>(Region::kHair);
}

double median(std::vector<double> v)
{
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

nlohmann::json threshold_to_json(double t)
{
  if (std::isinf(t)) {
    return t > 0 ? "inf" : "-inf";
  }
  return t;
}

double threshold_from_json(const nlohmann::json & j)
{
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") {return std::numeric_limits<double>::infinity();}
    if (s == "-inf") {return -std::numeric_limits<double>::infinity();}
    throw Error(ErrorCode::kParseError, "threshold must be a number, \"inf\" or \"-inf\"");
  }
  return j.get<double>();
}

}  // namespace

PreprocessedMask preprocess(const LabeledMask & mask)
{
  const Keypoints & kp = mask.keypoints;
  if (!kp.elbow_left || !kp.elbow_right) {
    throw Error(ErrorCode::kMissingKeypoint,
      fmt::format("scene {}: elbow keypoint missing", mask.truth.scene_id));
  }
  // Image rows grow downward: the higher elbow has the smaller row.
  const double higher = std::min(kp.elbow_left->y, kp.elbow_right->y);
  const int bottom = std::clamp(static_cast<int>(std::floor(higher)), 0, mask.height);

  int top = -1;
  for (int j = 0; j < bottom && top < 0; ++j) {
    for (int i = 0; i < mask.width; ++i) {
      if (mask.at(i, j) != 0) {
        top = j;
        break;
      }
    }
  }
  double sum_x = 0.0;
  std::size_t n = 0;
  for (int j = std::max(top, 0); j < bottom; ++j) {
    for (int i = 0; i < mask.width; ++i) {
      if (is_head_neck(mask.at(i, j))) {
        sum_x += i + 0.5;
        ++n;
      }
    }
  }
  if (top < 0 || n == 0) {
    throw Error(ErrorCode::kEmptyMask,
      fmt::format("scene {}: no head-neck pixels above the elbows", mask.truth.scene_id));
  }

  PreprocessedMask out;
  out.source_scene_id = mask.truth.scene_id;
  CropRecord & c = out.crop;
  c.top_row = top;
  c.bottom_row = bottom;
  c.mass_center_x = sum_x / static_cast<double>(n);
  const int height = bottom - top;
  c.window_width = std::max(1, static_cast<int>(std::lround(height * 3.0 / 4.0)));
  c.window_left = static_cast<int>(std::lround(c.mass_center_x - c.window_width / 2.0));
  c.left_col = std::clamp(c.window_left, 0, mask.width);
  c.right_col = std::clamp(c.window_left + c.window_width, 0, mask.width);

  out.labels.assign(static_cast<std::size_t>(kModelInputSize) * kModelInputSize, 0);
  for (int r = 0; r < kModelInputSize; ++r) {
    const int src_row = top + static_cast<int>((r + 0.5) * height / kModelInputSize);
    for (int q = 0; q < kModelInputSize; ++q) {
      const int src_col = c.window_left +
        static_cast<int>((q + 0.5) * c.window_width / kModelInputSize);
      if (src_col >= 0 && src_col < mask.width) {
        out.labels[static_cast<std::size_t>(r) * kModelInputSize + q] = mask.at(src_col, src_row);
      }
    }
  }
  return out;
}

double geometric_shift_feature(const PreprocessedMask & p)
{
  constexpr int n = kModelInputSize;
  const auto clothes = static_cast<std::uint8_t>(Region::kClothes);

  double sum_x = 0.0;
  std::size_t count = 0;
  std::vector<double> clean_mid;
  std::vector<double> all_mid;
  for (int r = 0; r < n; ++r) {
    int lo = -1;
    int hi = -1;
    for (int q = 0; q < n; ++q) {
      const std::uint8_t v = p.at(q, r);
      if (is_head_neck(v)) {
        sum_x += q + 0.5;
        ++count;
      } else if (v == clothes) {
        if (lo < 0) {lo = q;}
        hi = q;
      }
    }
    if (lo >= 0) {
      const double mid = 0.5 * (lo + hi + 1);
      all_mid.push_back(mid);
      if (lo > 0 && hi < n - 1) {
        clean_mid.push_back(mid);
      }
    }
  }
  if (count == 0 || all_mid.empty()) {
    throw Error(ErrorCode::kEmptyMask,
      fmt::format("scene {}: head-neck or clothes region missing", p.source_scene_id));
  }
  const double midline = median(clean_mid.empty() ? all_mid : clean_mid);
  return (sum_x / static_cast<double>(count) - midline) / n;
}

CalibrationModel calibrate(std::span<const double> features, std::span<const double> truths)
{
  if (features.size() != truths.size()) {
    throw Error(ErrorCode::kInvalidArgument, "features and truths differ in length");
  }
  if (features.size() < kMinCalibrationSamples) {
    throw Error(ErrorCode::kInvalidArgument,
      fmt::format("calibration needs at least {} samples, got {}",
        kMinCalibrationSamples, features.size()));
  }
  const double n = static_cast<double>(features.size());
  const double mf = std::accumulate(features.begin(), features.end(), 0.0) / n;
  const double mt = std::accumulate(truths.begin(), truths.end(), 0.0) / n;
  double sff = 0.0;
  double stt = 0.0;
  double sft = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double df = features[i] - mf;
    const double dt = truths[i] - mt;
    sff += df * df;
    stt += dt * dt;
    sft += df * dt;
  }
  if (!(sff > 0.0)) {
    throw Error(ErrorCode::kDegenerateFit, "feature variance is zero");
  }
  CalibrationModel m;
  m.slope = sft / sff;
  m.intercept = mt - m.slope * mf;
  m.r_train = stt > 0.0 ? sft / std::sqrt(sff * stt) : 0.0;
  m.n_train = features.size();
  if (!std::isfinite(m.slope) || !std::isfinite(m.intercept)) {
    throw Error(ErrorCode::kDegenerateFit, "non-finite calibration coefficients");
  }
  return m;
}

ShiftEstimate estimate_shift(
  const PreprocessedMask & p, const CalibrationModel & model, double threshold)
{
  ShiftEstimate e;
  e.score = model.predict(geometric_shift_feature(p));
  e.threshold_used = threshold;
  e.binary = e.score >= threshold ? 1 : 0;
  return e;
}

double tpr_plus_accuracy(
  std::span<const double> scores, std::span<const int> labels, double threshold)
{
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (labels[i] == 1) {
      ++pos;
      tp += pred ? 1 : 0;
    } else {
      tn += pred ? 0 : 1;
    }
  }
  return static_cast<double>(tp) / static_cast<double>(pos) +
         static_cast<double>(tp + tn) / static_cast<double>(scores.size());
}

double select_threshold(std::span<const double> scores, std::span<const int> labels)
{
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::kInvalidArgument, "scores and labels differ in length");
  }
  std::size_t pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw Error(ErrorCode::kInvalidArgument, "labels must be 0 or 1");
    }
    if (!std::isfinite(scores[i])) {
      throw Error(ErrorCode::kInvalidArgument, "scores must be finite");
    }
    pos += static_cast<std::size_t>(labels[i]);
  }
  const std::size_t total = labels.size();
  if (pos == 0 || pos == total) {
    throw Error(ErrorCode::kSingleClass, "threshold selection needs both classes");
  }

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
    [&](std::size_t a, std::size_t b) {return scores[a] < scores[b];});

  // Sweep upward from t = -inf (everything positive).
  std::size_t tp = pos;
  std::size_t tn = 0;
  auto objective = [&]() {
      return static_cast<double>(tp) / static_cast<double>(pos) +
             static_cast<double>(tp + tn) / static_cast<double>(total);
    };
  double best_t = -std::numeric_limits<double>::infinity();
  double best = objective();
  std::size_t k = 0;
  while (k < total) {
    const double value = scores[order[k]];
    while (k < total && scores[order[k]] == value) {
      if (labels[order[k]] == 1) {--tp;} else {++tn;}
      ++k;
    }
    const double t = k < total ? (value + scores[order[k]]) / 2.0 :
      std::numeric_limits<double>::infinity();
    const double obj = objective();
    if (obj > best) {
      best = obj;
      best_t = t;
    }
  }
  return best_t;
}

void save_shift_model(const ShiftModel & model, const std::filesystem::path & path)
{
  nlohmann::json j;
  j["slope"] = model.calibration.slope;
  j["intercept"] = model.calibration.intercept;
  j["r_train"] = model.calibration.r_train;
  j["n_train"] = model.calibration.n_train;
  j["threshold"] = threshold_to_json(model.threshold);
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot write " + path.string());
  }
  out << j.dump(2) << '\n';
}

ShiftModel load_shift_model(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot read " + path.string());
  }
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    ShiftModel m;
    m.calibration.slope = j.at("slope").get<double>();
    m.calibration.intercept = j.at("intercept").get<double>();
    m.calibration.r_train = j.at("r_train").get<double>();
    m.calibration.n_train = j.at("n_train").get<std::size_t>();
    m.threshold = threshold_from_json(j.at("threshold"));
    return m;
  } catch (const nlohmann::json::exception & e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
}

std::vector<PredictionRecord> load_prediction_records(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot read " + path.string());
  }
  std::vector<PredictionRecord> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    PredictionRecord rec;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      rec.scene_id = j.at("scene_id").get<std::string>();
      rec.score = j.at("score").get<double>();
      if (j.contains("yaw") || j.contains("pitch") || j.contains("roll")) {
        rec.angles = EulerAngles{j.at("yaw").get<double>(), j.at("pitch").get<double>(),
          j.at("roll").get<double>()};
      }
    } catch (const nlohmann::json::exception & e) {
      throw Error(ErrorCode::kParseError,
        fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
    if (!seen.insert(rec.scene_id).second) {
      throw Error(ErrorCode::kDuplicateId,
        fmt::format("{}:{}: duplicate scene_id '{}'", path.string(), line_no, rec.scene_id));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::map<std::string, double> load_external_predictions(const std::filesystem::path & path)
{
  std::map<std::string, double> out;
  for (auto & rec : load_prediction_records(path)) {
    out.emplace(std::move(rec.scene_id), rec.score);
  }
  return out;
}

}  // namespace cdpose
