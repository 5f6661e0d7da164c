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

#include "cdpose/dataset_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cdpose/error.hpp"

namespace cdpose
{

namespace
{

std::string fixed6(double v)
{
  std::string s = fmt::format("{:.6f}", v);
  if (s == "-0.000000") {
    s.erase(0, 1);
  }
  return s;
}

std::string angles_json(const EulerAngles & e)
{
  return fmt::format(R"({{"yaw":{},"pitch":{},"roll":{}}})", fixed6(e.yaw), fixed6(e.pitch),
    fixed6(e.roll));
}

EulerAngles angles_from_json(const nlohmann::json & j)
{
  return {j.at("yaw").get<double>(), j.at("pitch").get<double>(), j.at("roll").get<double>()};
}

nlohmann::json point_json(const Point2 & p)
{
  return nlohmann::json::array({p.x, p.y});
}

Point2 point_from_json(const nlohmann::json & j)
{
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

}  // namespace

std::string label_to_jsonl(const GroundTruthLabel & label)
{
  const TwstrsAssessment & a = label.assessment;
  return fmt::format(
    R"({{"scene_id":{},"head":{},"neck":{},"shift":{},"composed":{},)"
    R"("twstrs":{{"torticollis":{},"laterocollis":{},"antero_retrocollis":{},"direction":"{}","lateral_shift":{}}}}})",
    nlohmann::json(label.scene_id).dump(), angles_json(label.pose.head),
    angles_json(label.pose.neck), fixed6(label.pose.shift), angles_json(label.composed),
    a.torticollis, a.laterocollis, a.antero_retrocollis, to_string(a.antero_retro_direction),
    a.lateral_shift);
}

GroundTruthLabel label_from_json(const nlohmann::json & j)
{
  GroundTruthLabel l;
  l.scene_id = j.at("scene_id").get<std::string>();
  l.pose.head = angles_from_json(j.at("head"));
  l.pose.neck = angles_from_json(j.at("neck"));
  l.pose.shift = j.at("shift").get<double>();
  l.composed = angles_from_json(j.at("composed"));
  const auto & t = j.at("twstrs");
  l.assessment.torticollis = t.at("torticollis").get<int>();
  l.assessment.laterocollis = t.at("laterocollis").get<int>();
  l.assessment.antero_retrocollis = t.at("antero_retrocollis").get<int>();
  l.assessment.antero_retro_direction = parse_direction(t.at("direction").get<std::string>());
  l.assessment.lateral_shift = t.at("lateral_shift").get<int>();
  l.assessment.source_angles = l.composed;
  l.assessment.source_shift = l.pose.shift;
  if (!l.pose.valid() || !l.assessment.valid()) {
    throw Error(ErrorCode::kParseError, "scene " + l.scene_id + ": values out of range");
  }
  return l;
}

void write_dataset(const std::filesystem::path & path, const std::vector<GroundTruthLabel> & labels)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot write " + path.string());
  }
  for (const auto & l : labels) {
    out << label_to_jsonl(l) << '\n';
  }
  if (!out) {
    throw Error(ErrorCode::kIo, "write failed: " + path.string());
  }
}

std::vector<GroundTruthLabel> read_dataset(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot read " + path.string());
  }
  std::vector<GroundTruthLabel> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    try {
      out.push_back(label_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception & e) {
      throw Error(ErrorCode::kParseError, fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    } catch (const Error & e) {
      throw Error(ErrorCode::kParseError, fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
    if (!ids.insert(out.back().scene_id).second) {
      throw Error(ErrorCode::kDuplicateId,
        fmt::format("{}:{}: duplicate scene_id '{}'", path.string(), line_no, out.back().scene_id));
    }
  }
  return out;
}

void write_pgm(const std::filesystem::path & path, int width, int height,
  const std::vector<std::uint8_t> & pixels)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot write " + path.string());
  }
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char *>(pixels.data()),
    static_cast<std::streamsize>(pixels.size()));
  if (!out) {
    throw Error(ErrorCode::kIo, "write failed: " + path.string());
  }
}

std::vector<std::uint8_t> read_pgm(const std::filesystem::path & path, int & width, int & height)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot read " + path.string());
  }
  std::string magic;
  int maxval = 0;
  in >> magic >> width >> height >> maxval;
  if (!in || magic != "P5" || width <= 0 || height <= 0 || maxval <= 0 || maxval > 255) {
    throw Error(ErrorCode::kParseError, path.string() + ": not an 8-bit binary PGM");
  }
  in.get();
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(width) * height);
  in.read(reinterpret_cast<char *>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(pixels.size())) {
    throw Error(ErrorCode::kParseError, path.string() + ": truncated raster");
  }
  return pixels;
}

std::string mask_entry_to_jsonl(const MaskEntry & e)
{
  nlohmann::json kp;
  if (e.keypoints.elbow_left) {kp["elbow_left"] = point_json(*e.keypoints.elbow_left);}
  if (e.keypoints.elbow_right) {kp["elbow_right"] = point_json(*e.keypoints.elbow_right);}
  kp["head_center"] = point_json(e.keypoints.head_center);
  kp["trunk_midline_x"] = e.keypoints.trunk_midline_x;
  nlohmann::json j;
  j["scene_id"] = e.scene_id;
  j["file"] = e.file;
  j["width"] = e.width;
  j["height"] = e.height;
  j["appearance_seed"] = e.appearance_seed;
  j["keypoints"] = std::move(kp);
  j["truth"] = nlohmann::json::parse(label_to_jsonl(e.truth));
  return j.dump();
}

std::vector<MaskEntry> read_mask_manifest(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot read " + path.string());
  }
  std::vector<MaskEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    try {
      const auto j = nlohmann::json::parse(line);
      MaskEntry e;
      e.scene_id = j.at("scene_id").get<std::string>();
      e.file = j.at("file").get<std::string>();
      e.width = j.at("width").get<int>();
      e.height = j.at("height").get<int>();
      e.appearance_seed = j.at("appearance_seed").get<std::uint64_t>();
      const auto & kp = j.at("keypoints");
      if (kp.contains("elbow_left")) {e.keypoints.elbow_left = point_from_json(kp["elbow_left"]);}
      if (kp.contains("elbow_right")) {e.keypoints.elbow_right = point_from_json(kp["elbow_right"]);}
      e.keypoints.head_center = point_from_json(kp.at("head_center"));
      e.keypoints.trunk_midline_x = kp.at("trunk_midline_x").get<double>();
      e.truth = label_from_json(j.at("truth"));
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception & e) {
      throw Error(ErrorCode::kParseError, fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    } catch (const Error & e) {
      throw Error(ErrorCode::kParseError, fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return out;
}

LabeledMask load_mask(const std::filesystem::path & dir, const MaskEntry & entry)
{
  LabeledMask m;
  m.labels = read_pgm(dir / entry.file, m.width, m.height);
  if (m.width != entry.width || m.height != entry.height) {
    throw Error(ErrorCode::kParseError, entry.file + ": raster size disagrees with manifest");
  }
  m.keypoints = entry.keypoints;
  m.truth = entry.truth;
  return m;
}

}  // namespace cdpose
