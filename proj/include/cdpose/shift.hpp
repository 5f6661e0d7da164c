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

#ifndef CDPOSE_SHIFT_HPP_
#define CDPOSE_SHIFT_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdpose/avatar.hpp"

namespace cdpose
{

/// Side length of the square network input.
inline constexpr int kModelInputSize = 224;

struct CropRecord
{
  /// Rows [top_row, bottom_row) were kept.
  int top_row = 0;
  int bottom_row = 0;
  /// Source columns [left_col, right_col) actually copied (clamped to the image).
  int left_col = 0;
  int right_col = 0;
  /// The unclamped 3:4 window; columns outside the image are background.
  int window_left = 0;
  int window_width = 0;
  double mass_center_x = 0.0;
};

struct PreprocessedMask
{
  /// kModelInputSize x kModelInputSize, row-major.
  std::vector<std::uint8_t> labels;
  CropRecord crop;
  std::string source_scene_id;

  std::uint8_t at(int x, int y) const {return labels[static_cast<std::size_t>(y) * kModelInputSize + x];}
};

/// Crops below at the higher elbow, above at the first non-background row,
/// centers a width = 3/4 height window on the head-neck mass center (padding
/// with background) and resizes to 224x224 by nearest neighbour.
///
/// Throws MissingKeypoint without both elbows, EmptyMask without head-neck
/// pixels above the elbows.
PreprocessedMask preprocess(const LabeledMask & mask);

/// (head-neck centroid x − trunk midline x) / width on the 224 raster.
/// The midline is the median over rows of the clothes region's extent,
/// ignoring rows clipped by the window when any unclipped row exists.
///
/// Throws EmptyMask if either region is missing.
double geometric_shift_feature(const PreprocessedMask & p);

struct CalibrationModel
{
  double slope = 1.0;
  double intercept = 0.0;
  double r_train = 0.0;
  std::size_t n_train = 0;

  double predict(double feature) const {return slope * feature + intercept;}
};

inline constexpr std::size_t kMinCalibrationSamples = 30;

/// OLS fit of truth on feature. Throws InvalidArgument for mismatched or too
/// short inputs and DegenerateFit for zero feature variance.
CalibrationModel calibrate(std::span<const double> features, std::span<const double> truths);

struct ShiftEstimate
{
  double score = 0.0;
  int binary = 0;
  double threshold_used = 0.0;
};

ShiftEstimate estimate_shift(
  const PreprocessedMask & p, const CalibrationModel & model, double threshold);

/// TPR + accuracy of the rule `score >= threshold`.
double tpr_plus_accuracy(
  std::span<const double> scores, std::span<const int> labels, double threshold);

/// Threshold maximizing TPR + accuracy over the midpoints between sorted
/// unique scores and the ±infinity sentinels; ties go to the smallest
/// threshold. Throws SingleClass if only one label value occurs.
double select_threshold(std::span<const double> scores, std::span<const int> labels);

/// Calibration model plus decision threshold, as persisted on disk.
struct ShiftModel
{
  CalibrationModel calibration;
  double threshold = 0.0;
};

void save_shift_model(const ShiftModel & model, const std::filesystem::path & path);
ShiftModel load_shift_model(const std::filesystem::path & path);

/// One line of a prediction file. Angles are optional so shift-only
/// estimators and full pose estimators share the format.
struct PredictionRecord
{
  std::string scene_id;
  double score = 0.0;
  std::optional<EulerAngles> angles;
};

/// JSON-lines {scene_id, score[, yaw, pitch, roll]}; blank lines skipped.
/// Throws ParseError (with line number) and DuplicateId.
std::vector<PredictionRecord> load_prediction_records(const std::filesystem::path & path);

std::map<std::string, double> load_external_predictions(const std::filesystem::path & path);

}  // namespace cdpose

#endif  // CDPOSE_SHIFT_HPP_
