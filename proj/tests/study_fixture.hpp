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

#ifndef CDPOSE_TESTS_STUDY_FIXTURE_HPP_
#define CDPOSE_TESTS_STUDY_FIXTURE_HPP_

#include <filesystem>
#include <string>
#include <unistd.h>

#include <fmt/format.h>

#include "cdpose/rater_service.hpp"

namespace cdpose::testing
{

inline StudyManifest make_manifest(int avatars, int reals, int quota_avatar, int quota_real)
{
  StudyManifest m;
  m.quota_avatar = quota_avatar;
  m.quota_real = quota_real;
  for (int i = 0; i < avatars; ++i) {
    const std::string id = fmt::format("avatar-{:03d}", i);
    m.images.push_back({id, ImageKind::kAvatar, "/img/" + id + "-front.png",
        "/img/" + id + "-side.png"});
  }
  for (int i = 0; i < reals; ++i) {
    const std::string id = fmt::format("real-{:03d}", i);
    m.images.push_back({id, ImageKind::kReal, "/img/" + id + "-front.png",
        "/img/" + id + "-side.png"});
  }
  return m;
}

/// Fresh log path unique to this process.
inline std::filesystem::path fresh_log(const std::string & name)
{
  const auto dir = std::filesystem::temp_directory_path() /
    fmt::format("cdpose_study_{}", ::getpid());
  std::filesystem::create_directories(dir);
  const auto p = dir / (name + ".jsonl");
  std::filesystem::remove(p);
  return p;
}

/// Deterministic, in-range scores derived from (rater, image) positions.
inline SubmittedScores scores_for(std::size_t rater, std::size_t image)
{
  SubmittedScores s;
  s[TwstrsItem::kTorticollis] = static_cast<int>((rater + image) % 5);
  s[TwstrsItem::kLaterocollis] = static_cast<int>((image * 7 + rater) % 4);
  s[TwstrsItem::kAnteroRetrocollis] = static_cast<int>(image % 4);
  s[TwstrsItem::kLateralShift] = static_cast<int>((image + rater / 3) % 2);
  s.direction = s[TwstrsItem::kAnteroRetrocollis] ? AnteroRetroDirection::kRetrocollis :
    AnteroRetroDirection::kNone;
  return s;
}

}  // namespace cdpose::testing

#endif  // CDPOSE_TESTS_STUDY_FIXTURE_HPP_
