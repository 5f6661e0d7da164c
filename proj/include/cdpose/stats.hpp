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

#ifndef CDPOSE_STATS_HPP_
#define CDPOSE_STATS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cdpose/twstrs.hpp"

namespace cdpose
{

enum class ImageKind
{
  kAvatar,
  kReal,
};

std::string_view to_string(ImageKind kind);
ImageKind parse_image_kind(std::string_view name);

struct RatingRecord
{
  std::string rater_id;
  std::string image_id;
  TwstrsItem item = TwstrsItem::kTorticollis;
  int value = 0;
  ImageKind image_kind = ImageKind::kAvatar;
};

/// Throws OutOfRangeScore for a value outside the item's range and
/// DuplicateId for a repeated (rater, image, item).
void validate_records(std::span<const RatingRecord> records);

/// CSV with header rater_id,image_id,image_kind,item,value. Throws ParseError
/// with the line number; records are validated.
std::vector<RatingRecord> read_ratings_csv(const std::filesystem::path & path);
std::vector<RatingRecord> read_ratings_csv(std::istream & in, std::string_view source);
void write_ratings_csv(std::ostream & out, std::span<const RatingRecord> records);

/// Arithmetic mean of all ratings of `image_id` on `item`. Throws NoRatings.
double mean_rating(std::span<const RatingRecord> records, std::string_view image_id, TwstrsItem item);

/// Mean rating per image for one item.
std::map<std::string, double> mean_ratings(std::span<const RatingRecord> records, TwstrsItem item);

/// Sample Pearson correlation. Throws InvalidArgument for fewer than three
/// pairs or unequal lengths, ZeroVariance if either side is constant.
double pearson_r(std::span<const double> x, std::span<const double> y);

struct ClassificationMetrics
{
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double accuracy = 0.0;
  /// Undefined (nullopt) when the truth has no positives.
  std::optional<double> tpr;

  /// Throws NoPositives when the TPR is undefined.
  double require_tpr() const;
};

ClassificationMetrics classification_metrics(std::span<const int> pred, std::span<const int> truth);

enum class AlphaMetric
{
  kNominal,
  kOrdinal,
};

std::string_view to_string(AlphaMetric metric);

/// Lateral shift is a presence item (nominal); the rotational items are ordinal.
AlphaMetric default_metric(TwstrsItem item);

/// Ratings of one image (unit) on one item; missing ratings are simply absent.
struct RatingUnit
{
  std::string image_id;
  std::vector<int> values;
};

/// Sparse items × images × raters array.
class RatingMatrix
{
public:
  RatingMatrix() = default;

  /// Builds from records, optionally restricted to one image kind.
  static RatingMatrix from_records(
    std::span<const RatingRecord> records, std::optional<ImageKind> kind = std::nullopt);

  void add(const std::string & image_id, const std::string & rater_id, TwstrsItem item, int value);

  /// Units for `item`, ordered by image id; raters ordered by id.
  std::vector<RatingUnit> units(TwstrsItem item) const;

  std::size_t rating_count(TwstrsItem item) const;

private:
  // item -> image -> rater -> value
  std::map<TwstrsItem, std::map<std::string, std::map<std::string, int>>> cells_;
};

/// Krippendorff's alpha over units (coincidence-matrix form with pairable
/// values). Returns 1 when there is no variation at all. Throws
/// InsufficientData unless at least two units carry two or more values.
double krippendorff_alpha(std::span<const RatingUnit> units, AlphaMetric metric);
double krippendorff_alpha(const RatingMatrix & m, TwstrsItem item, AlphaMetric metric);

struct AgreementResult
{
  double alpha = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  AlphaMetric metric = AlphaMetric::kOrdinal;
  std::size_t n_bootstrap = 0;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kDefaultBootstrapIterations = 2000;

/// Percentile bootstrap over images: pairable images are resampled with
/// replacement `n_iter` times and the 2.5/97.5 percentiles (linear
/// interpolation) of alpha form the interval. Iteration i draws from a
/// generator seeded by (seed, i).
AgreementResult bootstrap_alpha_ci(
  std::span<const RatingUnit> units, AlphaMetric metric,
  std::size_t n_iter = kDefaultBootstrapIterations, std::uint64_t seed = 0);
AgreementResult bootstrap_alpha_ci(
  const RatingMatrix & m, TwstrsItem item, AlphaMetric metric,
  std::size_t n_iter = kDefaultBootstrapIterations, std::uint64_t seed = 0);

/// Linear-interpolated percentile (p in [0, 1]) of an unsorted sample.
double percentile(std::vector<double> values, double p);

}  // namespace cdpose

#endif  // CDPOSE_STATS_HPP_
