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

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <thread>
#include <vector>

#include <doctest.h>

#include "cdpose/error.hpp"
#include "cdpose/rater_service.hpp"
#include "study_fixture.hpp"

using namespace cdpose;
using namespace cdpose::testing;

namespace
{

void rate_all(RaterStudy & study, const std::string & rater, std::size_t rater_index)
{
  std::size_t k = 0;
  while (auto task = study.next_image(rater)) {
    study.submit_rating(rater, task->image.image_id, scores_for(rater_index, k++));
  }
}

std::map<std::string, int> ratings_per_image(const RaterStudy & study, TwstrsItem item)
{
  std::map<std::string, int> out;
  for (const auto & r : study.records()) {
    if (r.item == item) {
      ++out[r.image_id];
    }
  }
  return out;
}

}  // namespace

TEST_CASE("manifest validation") {
  CHECK_THROWS_AS(make_manifest(0, 0, 0, 0).validate(), Error);
  CHECK_THROWS_AS(make_manifest(10, 10, 11, 5).validate(), Error);
  auto dup = make_manifest(3, 3, 2, 2);
  dup.images[1].image_id = dup.images[0].image_id;
  CHECK_THROWS_AS(dup.validate(), Error);
  CHECK_NOTHROW(make_manifest(100, 100, 50, 50).validate());

  const auto path = fresh_log("manifest").replace_extension(".json");
  std::ofstream(path) << R"({"target_ratings_per_image": 3, "per_rater_quota": {"avatar": 1, "real": 1},
    "images": [{"image_id": "a", "image_kind": "avatar", "front_uri": "f", "side_uri": "s"},
               {"image_id": "b", "image_kind": "real", "front_uri": "f2", "side_uri": "s2"}]})";
  const auto m = StudyManifest::load(path);
  CHECK(m.images.size() == 2);
  CHECK(m.target_ratings_per_image == 3);
  CHECK(m.quota(ImageKind::kReal) == 1);
  CHECK(m.images[1].side_uri == "s2");
  std::ofstream(path) << R"({"images": []})";
  CHECK_THROWS_AS(StudyManifest::load(path), Error);
  std::ofstream(path) << "{not json";
  CHECK_THROWS_AS(StudyManifest::load(path), Error);
}

TEST_CASE("first assignment interleaves kinds without repeats") {
  RaterStudy study(make_manifest(100, 100, 50, 50), fresh_log("first"));
  const Assignment a = study.register_rater("r1");
  REQUIRE(a.image_ids.size() == 100);
  CHECK(std::set<std::string>(a.image_ids.begin(), a.image_ids.end()).size() == 100);
  for (std::size_t i = 0; i < a.image_ids.size(); ++i) {
    CHECK(a.image_ids[i].rfind(i % 2 == 0 ? "avatar-" : "real-", 0) == 0);
  }
  CHECK(a.token.size() == 32);
  int ones = 0;
  for (const auto & [id, n] : study.assignment_counts()) {
    CHECK(n <= 1);
    ones += n;
  }
  CHECK(ones == 100);
  try {
    study.register_rater("r1");
    FAIL("expected DuplicateRater");
  } catch (const Error & e) {
    CHECK(e.code() == ErrorCode::kDuplicateRater);
  }
}

TEST_CASE("twenty raters balance to exactly ten per image") {
  RaterStudy study(make_manifest(100, 100, 50, 50), fresh_log("balance"));
  for (int r = 0; r < 20; ++r) {
    study.register_rater(fmt::format("rater-{:02d}", r));
  }
  for (const auto & [id, n] : study.assignment_counts()) {
    CHECK(n == 10);
  }
  study.register_rater("rater-20");
  int lo = 100, hi = 0;
  for (const auto & [id, n] : study.assignment_counts()) {
    lo = std::min(lo, n);
    hi = std::max(hi, n);
  }
  CHECK(lo == 10);
  CHECK(hi == 11);
}

TEST_CASE("balance holds whenever quotas divide evenly") {
  for (auto [n, q, r] : {std::tuple{12, 4, 6}, {30, 10, 9}, {8, 8, 3}, {20, 5, 12}}) {
    RaterStudy study(make_manifest(n, n, q, q), fresh_log("even"));
    for (int i = 0; i < r; ++i) {
      study.register_rater("r" + std::to_string(i));
    }
    int lo = 1 << 30, hi = 0;
    for (const auto & [id, c] : study.assignment_counts()) {
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
    CHECK(hi - lo <= 1);
    if ((r * q) % n == 0) {
      CHECK(hi == lo);
    }
  }
}

TEST_CASE("next_image and submit_rating") {
  RaterStudy study(make_manifest(4, 4, 2, 3), fresh_log("flow"));
  const Assignment a = study.register_rater("r1");
  REQUIRE(a.image_ids.size() == 5);
  const auto first = study.next_image("r1");
  REQUIRE(first);
  CHECK(first->image.image_id == a.image_ids[0]);
  CHECK(first->index == 0);
  CHECK(first->total == 5);
  CHECK(study.next_image("r1")->image.image_id == a.image_ids[0]);

  SubmittedScores bad = scores_for(0, 0);
  bad[TwstrsItem::kTorticollis] = 5;
  try {
    study.submit_rating("r1", a.image_ids[0], bad);
    FAIL("expected OutOfRangeScore");
  } catch (const ScoreRangeError & e) {
    CHECK(e.code() == ErrorCode::kOutOfRangeScore);
    CHECK(e.item() == TwstrsItem::kTorticollis);
    CHECK(e.bound() == 4);
  }
  bad = scores_for(0, 0);
  bad[TwstrsItem::kLateralShift] = -1;
  CHECK_THROWS_AS(study.submit_rating("r1", a.image_ids[0], bad), ScoreRangeError);
  CHECK(study.records().empty());

  CHECK(study.submit_rating("r1", a.image_ids[0], scores_for(0, 0)) == 1);
  CHECK(study.records().size() == 4);
  try {
    study.submit_rating("r1", a.image_ids[0], scores_for(0, 0));
    FAIL("expected WrongImage");
  } catch (const Error & e) {
    CHECK(e.code() == ErrorCode::kWrongImage);
  }
  CHECK_THROWS_AS(study.submit_rating("r1", a.image_ids[3], scores_for(0, 0)), Error);
  try {
    study.next_image("ghost");
    FAIL("expected UnknownRater");
  } catch (const Error & e) {
    CHECK(e.code() == ErrorCode::kUnknownRater);
  }
  CHECK_THROWS_AS(study.submit_rating("ghost", a.image_ids[1], scores_for(0, 0)), Error);

  rate_all(study, "r1", 0);
  CHECK_FALSE(study.next_image("r1").has_value());
  CHECK(study.records().size() == 20);
  CHECK(study.check_token("r1", a.token));
  CHECK_FALSE(study.check_token("r1", "nope"));
  CHECK_FALSE(study.check_token("r1", ""));
  CHECK_FALSE(study.check_token("ghost", a.token));
}

TEST_CASE("full study yields ten ratings per image") {
  RaterStudy study(make_manifest(100, 100, 50, 50), fresh_log("full"));
  for (std::size_t r = 0; r < 20; ++r) {
    const std::string id = fmt::format("rater-{:02d}", r);
    study.register_rater(id);
    rate_all(study, id, r);
  }
  for (TwstrsItem item : kAllItems) {
    const auto counts = ratings_per_image(study, item);
    CHECK(counts.size() == 200);
    for (const auto & [id, n] : counts) {
      CHECK(n == 10);
    }
  }
  const auto snap = study.agreement_snapshot(200);
  CHECK(snap.total_ratings == 8000);
  CHECK(snap.ratings_per_image_histogram.size() == 1);
  CHECK(snap.ratings_per_image_histogram.at(10) == 200);
  CHECK(snap.cells.size() == 12);
  for (const auto & c : snap.cells) {
    CHECK(c.result.has_value());
    CHECK(c.result->ci_low <= c.result->ci_high);
    CHECK(c.result->seed == kSnapshotSeed);
  }
}

TEST_CASE("snapshot reports insufficient data per item") {
  RaterStudy study(make_manifest(3, 3, 3, 0), fresh_log("sparse"));
  study.register_rater("a");
  rate_all(study, "a", 0);
  const auto snap = study.agreement_snapshot(50);
  CHECK(snap.total_ratings == 12);
  for (const auto & c : snap.cells) {
    CHECK_FALSE(c.result.has_value());
    CHECK_FALSE(c.error.empty());
  }
  CHECK(snap.ratings_per_image_histogram.at(0) == 3);
  CHECK(snap.ratings_per_image_histogram.at(1) == 3);
}

TEST_CASE("state is rebuilt from the log") {
  const auto log = fresh_log("replay");
  std::string token;
  {
    RaterStudy study(make_manifest(10, 10, 5, 5), log);
    token = study.register_rater("a").token;
    study.register_rater("b");
    for (int k = 0; k < 3; ++k) {
      const auto t = study.next_image("a");
      study.submit_rating("a", t->image.image_id, scores_for(0, k));
    }
  }
  RaterStudy again(make_manifest(10, 10, 5, 5), log);
  CHECK(again.rater_count() == 2);
  CHECK(again.check_token("a", token));
  CHECK(again.assignment("a")->cursor == 3);
  CHECK(again.records().size() == 12);
  int total = 0;
  for (const auto & [id, n] : again.assignment_counts()) {
    total += n;
  }
  CHECK(total == 20);
  CHECK_THROWS_AS(again.register_rater("b"), Error);
}

TEST_CASE("torn final line is dropped on replay") {
  const auto log = fresh_log("torn");
  {
    RaterStudy study(make_manifest(4, 4, 2, 2), log);
    study.register_rater("a");
    const auto t = study.next_image("a");
    study.submit_rating("a", t->image.image_id, scores_for(0, 0));
  }
  const auto intact = std::filesystem::file_size(log);
  std::ofstream(log, std::ios::app) << R"({"op":"rate","rater_id":"a","ima)";
  RaterStudy again(make_manifest(4, 4, 2, 2), log);
  CHECK(again.records().size() == 4);
  CHECK(std::filesystem::file_size(log) == intact);
  const auto t = again.next_image("a");
  again.submit_rating("a", t->image.image_id, scores_for(0, 1));
  RaterStudy third(make_manifest(4, 4, 2, 2), log);
  CHECK(third.records().size() == 8);
}

TEST_CASE("corrupt complete line is a parse error") {
  const auto log = fresh_log("corrupt");
  std::ofstream(log) << "{\"op\":\"dance\"}\n";
  try {
    RaterStudy study(make_manifest(4, 4, 2, 2), log);
    FAIL("expected ParseError");
  } catch (const Error & e) {
    CHECK(e.code() == ErrorCode::kParseError);
    CHECK(std::string(e.what()).find(":1:") != std::string::npos);
  }
}

TEST_CASE("killed writer loses no acknowledged rating") {
  const auto log = fresh_log("kill");
  int fds[2];
  REQUIRE(::pipe(fds) == 0);
  const pid_t child = ::fork();
  REQUIRE(child >= 0);
  if (child == 0) {
    ::close(fds[0]);
    RaterStudy study(make_manifest(100, 100, 50, 50), log);
    for (std::size_t r = 0; r < 20; ++r) {
      const std::string id = fmt::format("rater-{:02d}", r);
      study.register_rater(id);
      std::size_t k = 0;
      while (auto task = study.next_image(id)) {
        study.submit_rating(id, task->image.image_id, scores_for(r, k++));
        // Acknowledge only after submit_rating returned.
        const std::string ack = id + " " + task->image.image_id + "\n";
        if (::write(fds[1], ack.data(), ack.size()) < 0) {
          ::_exit(1);
        }
      }
    }
    ::_exit(0);
  }
  ::close(fds[1]);
  FILE * acks = ::fdopen(fds[0], "r");
  std::set<std::pair<std::string, std::string>> acked;
  char rater[64], image[64];
  while (acked.size() < 700 && std::fscanf(acks, "%63s %63s", rater, image) == 2) {
    acked.emplace(rater, image);
  }
  ::kill(child, SIGKILL);
  int status = 0;
  ::waitpid(child, &status, 0);
  while (std::fscanf(acks, "%63s %63s", rater, image) == 2) {
    acked.emplace(rater, image);
  }
  std::fclose(acks);
  CHECK(WIFSIGNALED(status));
  REQUIRE(acked.size() >= 700);

  RaterStudy restarted(make_manifest(100, 100, 50, 50), log);
  std::set<std::pair<std::string, std::string>> stored;
  for (const auto & r : restarted.records()) {
    stored.emplace(r.rater_id, r.image_id);
  }
  for (const auto & a : acked) {
    CHECK(stored.count(a) == 1);
  }
  // The restarted study continues where the killed one stopped.
  for (std::size_t r = 0; r < 20; ++r) {
    const std::string id = fmt::format("rater-{:02d}", r);
    if (!restarted.assignment(id)) {
      restarted.register_rater(id);
    }
    rate_all(restarted, id, r);
  }
  for (const auto & [id, n] : ratings_per_image(restarted, TwstrsItem::kTorticollis)) {
    CHECK(n == 10);
  }
}

TEST_CASE("concurrent raters do not corrupt the log") {
  const auto log = fresh_log("concurrent");
  {
    RaterStudy study(make_manifest(100, 100, 50, 50), log);
    std::vector<std::thread> threads;
    for (std::size_t r = 0; r < 20; ++r) {
      threads.emplace_back([&study, r]() {
          const std::string id = fmt::format("rater-{:02d}", r);
          study.register_rater(id);
          rate_all(study, id, r);
        });
    }
    for (auto & t : threads) {
      t.join();
    }
    CHECK(study.records().size() == 8000);
  }
  RaterStudy again(make_manifest(100, 100, 50, 50), log);
  CHECK(again.records().size() == 8000);
  for (const auto & [id, n] : ratings_per_image(again, TwstrsItem::kLateralShift)) {
    CHECK(n == 10);
  }
}
