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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "cdpose/dataset_io.hpp"
#include "cdpose/error.hpp"

using namespace cdpose;
namespace fs = std::filesystem;

namespace
{

fs::path scratch(const std::string & name)
{
  const fs::path dir = fs::temp_directory_path() / "cdpose_io_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path & p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("dataset line format") {
  CervicalPose pose;
  pose.head = {12.3456789, -0.0000001, 3};
  pose.neck = {0, 25, -7.5};
  pose.shift = 0.4;
  const auto label = make_label(pose, "scene-000007", 0.2);
  const std::string line = label_to_jsonl(label);
  CHECK(line.find("\"scene_id\":\"scene-000007\"") == 1);
  CHECK(line.find("\"yaw\":12.345679") != std::string::npos);
  CHECK(line.find("-0.000000") == std::string::npos);
  CHECK(line.find("\"shift\":0.400000") != std::string::npos);
  const auto j = nlohmann::json::parse(line);
  for (const char * key : {"scene_id", "head", "neck", "shift", "composed", "twstrs"}) {
    CHECK(j.contains(key));
  }
  for (const char * key : {"torticollis", "laterocollis", "antero_retrocollis", "direction",
      "lateral_shift"})
  {
    CHECK(j["twstrs"].contains(key));
  }
  CHECK(j["twstrs"]["direction"] == "retrocollis");
  CHECK(j["twstrs"]["lateral_shift"] == 1);
  const auto back = label_from_json(j);
  CHECK(back.scene_id == label.scene_id);
  CHECK(back.assessment.torticollis == label.assessment.torticollis);
  CHECK(std::abs(back.composed.pitch - label.composed.pitch) < 1e-6);
}

TEST_CASE("dataset round trip is stable and deterministic") {
  SamplerConfig c;
  c.count = 200;
  c.seed = 7;
  const auto labels = generate_dataset(c);
  const auto a = scratch("a.jsonl");
  const auto b = scratch("b.jsonl");
  write_dataset(a, labels);
  write_dataset(b, generate_dataset(c));
  CHECK(slurp(a) == slurp(b));
  const auto back = read_dataset(a);
  REQUIRE(back.size() == 200);
  const auto c2 = scratch("c.jsonl");
  write_dataset(c2, back);
  CHECK(slurp(c2) == slurp(a));
}

TEST_CASE("dataset parse errors carry the line number") {
  SamplerConfig c;
  c.count = 3;
  const auto good = scratch("good.jsonl");
  write_dataset(good, generate_dataset(c));
  std::string text = slurp(good);
  const auto second = text.find('\n') + 1;
  const auto bad = scratch("bad.jsonl");
  std::ofstream(bad) << text.substr(0, second) << "{\"scene_id\": \"x\", \"head\": 3}\n"
                     << text.substr(second);
  try {
    read_dataset(bad);
    FAIL("expected ParseError");
  } catch (const Error & e) {
    CHECK(e.code() == ErrorCode::kParseError);
    CHECK(std::string(e.what()).find("bad.jsonl:2") != std::string::npos);
  }
  const auto dup = scratch("dup.jsonl");
  std::ofstream(dup) << text << text.substr(0, second);
  try {
    read_dataset(dup);
    FAIL("expected DuplicateId");
  } catch (const Error & e) {
    CHECK(e.code() == ErrorCode::kDuplicateId);
  }
  const auto range = scratch("range.jsonl");
  std::string line = text.substr(0, second);
  line.replace(line.find("\"torticollis\":") + 14, 1, "9");
  std::ofstream(range) << line;
  CHECK_THROWS_AS(read_dataset(range), Error);
}

TEST_CASE("pgm round trip") {
  std::vector<std::uint8_t> px(12);
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = static_cast<std::uint8_t>(i % 7);
  }
  const auto p = scratch("m.pgm");
  write_pgm(p, 4, 3, px);
  CHECK(slurp(p).rfind("P5\n4 3\n255\n", 0) == 0);
  int w = 0, h = 0;
  CHECK(read_pgm(p, w, h) == px);
  CHECK(w == 4);
  CHECK(h == 3);
  const auto t = scratch("t.pgm");
  std::ofstream(t, std::ios::binary) << "P5\n4 3\n255\n" << std::string(5, '\0');
  CHECK_THROWS_AS(read_pgm(t, w, h), Error);
  const auto q = scratch("q.pgm");
  std::ofstream(q, std::ios::binary) << "P2\n1 1\n255\n0\n";
  CHECK_THROWS_AS(read_pgm(q, w, h), Error);
}

TEST_CASE("mask manifest round trip") {
  SamplerConfig c;
  c.seed = 21;
  const auto label = generate_scene(c, 3);
  FigureParams params;
  params.appearance_seed = 1234;
  const auto mask = render_mask(label, params);
  const fs::path dir = scratch("").parent_path();
  MaskEntry e{label.scene_id, "m3.pgm", mask.width, mask.height, params.appearance_seed,
    mask.keypoints, label};
  write_pgm(dir / e.file, mask.width, mask.height, mask.labels);
  std::ofstream(dir / "masks.jsonl") << mask_entry_to_jsonl(e) << "\n";
  const auto entries = read_mask_manifest(dir / "masks.jsonl");
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].appearance_seed == 1234);
  CHECK(entries[0].keypoints.elbow_left->y == mask.keypoints.elbow_left->y);
  const auto loaded = load_mask(dir, entries[0]);
  CHECK(loaded.labels == mask.labels);
  CHECK(loaded.truth.scene_id == label.scene_id);

  MaskEntry wrong = entries[0];
  wrong.width = 10;
  CHECK_THROWS_AS(load_mask(dir, wrong), Error);
  std::ofstream(dir / "broken.jsonl") << "\n{\"scene_id\": 1}\n";
  try {
    read_mask_manifest(dir / "broken.jsonl");
    FAIL("expected ParseError");
  } catch (const Error & err) {
    CHECK(std::string(err.what()).find("broken.jsonl:2") != std::string::npos);
  }
}
