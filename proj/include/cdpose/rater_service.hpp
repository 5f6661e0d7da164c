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

#ifndef CDPOSE_RATER_SERVICE_HPP_
#define CDPOSE_RATER_SERVICE_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "cdpose/error.hpp"
#include "cdpose/stats.hpp"
#include "cdpose/twstrs.hpp"

namespace cdpose
{

inline constexpr const char * kVersion = "0.1.0";

struct StudyImage
{
  std::string image_id;
  ImageKind kind = ImageKind::kAvatar;
  std::string front_uri;
  std::string side_uri;
};

struct StudyManifest
{
  std::vector<StudyImage> images;
  int target_ratings_per_image = 10;
  int quota_avatar = 50;
  int quota_real = 50;

  /// Throws InvalidArgument: empty manifest, duplicate ids, quotas larger
  /// than the images available per kind.
  void validate() const;
  int quota(ImageKind kind) const {return kind == ImageKind::kAvatar ? quota_avatar : quota_real;}

  /// JSON {target_ratings_per_image, per_rater_quota:{avatar, real},
  /// images:[{image_id, image_kind, front_uri, side_uri}]}.
  static StudyManifest load(const std::filesystem::path & path);
};

struct Assignment
{
  std::string rater_id;
  std::string token;
  std::vector<std::string> image_ids;
  std::size_t cursor = 0;
};

struct ImageTask
{
  StudyImage image;
  std::size_t index = 0;
  std::size_t total = 0;
};

/// One rater's scores for one image, indexed like kAllItems.
struct SubmittedScores
{
  std::array<int, 4> values = {0, 0, 0, 0};
  AnteroRetroDirection direction = AnteroRetroDirection::kNone;

  int & operator[](TwstrsItem item) {return values[static_cast<std::size_t>(item)];}
  int operator[](TwstrsItem item) const {return values[static_cast<std::size_t>(item)];}
};

/// Score outside the item's legal range.
class ScoreRangeError : public Error
{
public:
  ScoreRangeError(TwstrsItem item, int value);
  TwstrsItem item() const {return item_;}
  int bound() const {return max_score(item_);}

private:
  TwstrsItem item_;
};

struct AgreementCell
{
  TwstrsItem item = TwstrsItem::kTorticollis;
  /// nullopt: all image kinds pooled.
  std::optional<ImageKind> kind;
  std::size_t n_ratings = 0;
  std::optional<AgreementResult> result;
  /// Set when `result` is missing (InsufficientData).
  std::string error;
};

struct AgreementSnapshot
{
  std::vector<AgreementCell> cells;
  /// ratings received per image -> number of images
  std::map<std::size_t, std::size_t> ratings_per_image_histogram;
  std::size_t total_ratings = 0;
};

inline constexpr std::uint64_t kSnapshotSeed = 0x5EED2026;

/// The rating study: assignments, cursors and ratings, persisted to an
/// append-only JSON-lines log that is replayed on construction.
///
/// Thread-safe: readers share, writers are serialized and each write is
/// flushed to disk before the call returns.
class RaterStudy
{
public:
  RaterStudy(StudyManifest manifest, std::filesystem::path log_path);
  ~RaterStudy();

  RaterStudy(const RaterStudy &) = delete;
  RaterStudy & operator=(const RaterStudy &) = delete;

  /// Least-assigned-first per kind (ties by image id), kinds interleaved.
  /// Throws DuplicateRater.
  Assignment register_rater(const std::string & rater_id);

  /// nullopt once the assignment is exhausted. Throws UnknownRater.
  std::optional<ImageTask> next_image(const std::string & rater_id) const;

  /// Records the scores for the rater's current image and advances the
  /// cursor; returns the new cursor. Throws UnknownRater, WrongImage,
  /// ScoreRangeError (code OutOfRangeScore).
  std::size_t submit_rating(
    const std::string & rater_id, const std::string & image_id, const SubmittedScores & scores);

  bool check_token(const std::string & rater_id, const std::string & token) const;
  std::optional<Assignment> assignment(const std::string & rater_id) const;

  AgreementSnapshot agreement_snapshot(
    std::size_t n_iter = kDefaultBootstrapIterations, std::uint64_t seed = kSnapshotSeed) const;

  std::vector<RatingRecord> records() const;
  /// Number of raters each image is assigned to.
  std::map<std::string, int> assignment_counts() const;
  std::size_t rater_count() const;
  const StudyManifest & manifest() const {return manifest_;}

private:
  class Log;

  void apply_register(Assignment a);
  void apply_rating(const std::string & rater_id, const std::string & image_id,
    const SubmittedScores & scores);
  void replay();

  StudyManifest manifest_;
  std::map<std::string, const StudyImage *> images_;
  std::unique_ptr<Log> log_;

  mutable std::shared_mutex mu_;
  std::map<std::string, Assignment> raters_;
  std::map<std::string, int> assigned_;
  std::vector<RatingRecord> records_;
};

}  // namespace cdpose

#endif  // CDPOSE_RATER_SERVICE_HPP_
