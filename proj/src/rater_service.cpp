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

#include "cdpose/rater_service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace cdpose
{

namespace
{

std::string new_token()
{
  std::random_device rd;
  std::uniform_int_distribution<std::uint32_t> dist;
  return fmt::format("{:08x}{:08x}{:08x}{:08x}", dist(rd), dist(rd), dist(rd), dist(rd));
}

void check_scores(const SubmittedScores & s)
{
  for (TwstrsItem item : kAllItems) {
    if (s[item] < 0 || s[item] > max_score(item)) {
      throw ScoreRangeError(item, s[item]);
    }
  }
}

nlohmann::json scores_json(const SubmittedScores & s)
{
  nlohmann::json j;
  for (TwstrsItem item : kAllItems) {
    j[std::string(to_string(item))] = s[item];
  }
  return j;
}

SubmittedScores scores_from_json(const nlohmann::json & j, const nlohmann::json & direction)
{
  SubmittedScores s;
  for (TwstrsItem item : kAllItems) {
    s[item] = j.at(std::string(to_string(item))).get<int>();
  }
  s.direction = parse_direction(direction.get<std::string>());
  return s;
}

}  // namespace

ScoreRangeError::ScoreRangeError(TwstrsItem item, int value)
: Error(ErrorCode::kOutOfRangeScore,
    fmt::format("{} = {} outside [0, {}]", to_string(item), value, max_score(item))),
  item_(item)
{
}

void StudyManifest::validate() const
{
  if (images.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "study manifest lists no images");
  }
  std::set<std::string> ids;
  int avatars = 0;
  int reals = 0;
  for (const auto & img : images) {
    if (img.image_id.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "study manifest has an empty image_id");
    }
    if (!ids.insert(img.image_id).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate image_id " + img.image_id);
    }
    (img.kind == ImageKind::kAvatar ? avatars : reals)++;
  }
  if (quota_avatar < 0 || quota_real < 0 || quota_avatar + quota_real == 0) {
    throw Error(ErrorCode::kInvalidArgument, "per-rater quotas must be non-negative and not both zero");
  }
  if (quota_avatar > avatars || quota_real > reals) {
    throw Error(ErrorCode::kInvalidArgument,
      fmt::format("quotas {}+{} exceed available images {}+{}", quota_avatar, quota_real,
      avatars, reals));
  }
  if (target_ratings_per_image < 1) {
    throw Error(ErrorCode::kInvalidArgument, "target_ratings_per_image must be positive");
  }
}

StudyManifest StudyManifest::load(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot read study manifest " + path.string());
  }
  StudyManifest m;
  try {
    const auto j = nlohmann::json::parse(in);
    m.target_ratings_per_image = j.value("target_ratings_per_image", 10);
    if (j.contains("per_rater_quota")) {
      m.quota_avatar = j["per_rater_quota"].value("avatar", 50);
      m.quota_real = j["per_rater_quota"].value("real", 50);
    }
    for (const auto & img : j.at("images")) {
      m.images.push_back({img.at("image_id").get<std::string>(),
          parse_image_kind(img.at("image_kind").get<std::string>()),
          img.value("front_uri", std::string()), img.value("side_uri", std::string())});
    }
  } catch (const nlohmann::json::exception & e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
  m.validate();
  return m;
}

class RaterStudy::Log
{
public:
  explicit Log(const std::filesystem::path & path)
  : path_(path)
  {
    fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) {
      throw Error(ErrorCode::kIo,
        fmt::format("cannot open log {}: {}", path.string(), std::strerror(errno)));
    }
  }

  ~Log()
  {
    if (fd_ >= 0) {
      ::close(fd_);
    }
  }

  Log(const Log &) = delete;
  Log & operator=(const Log &) = delete;

  /// Returns once the line is on stable storage.
  void append(std::string line)
  {
    line.push_back('\n');
    const char * p = line.data();
    std::size_t left = line.size();
    while (left > 0) {
      const ssize_t n = ::write(fd_, p, left);
      if (n < 0) {
        if (errno == EINTR) {continue;}
        throw Error(ErrorCode::kIo,
          fmt::format("write to {} failed: {}", path_.string(), std::strerror(errno)));
      }
      p += n;
      left -= static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) {
      throw Error(ErrorCode::kIo,
        fmt::format("fsync of {} failed: {}", path_.string(), std::strerror(errno)));
    }
  }

private:
  std::filesystem::path path_;
  int fd_ = -1;
};

RaterStudy::RaterStudy(StudyManifest manifest, std::filesystem::path log_path)
: manifest_(std::move(manifest))
{
  manifest_.validate();
  for (const auto & img : manifest_.images) {
    images_.emplace(img.image_id, &img);
    assigned_.emplace(img.image_id, 0);
  }

  // Replay, dropping a torn final line (written but never acknowledged).
  if (std::filesystem::exists(log_path)) {
    std::string content;
    {
      std::ifstream in(log_path, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      content = ss.str();
    }
    const auto last_nl = content.rfind('\n');
    const std::size_t keep = last_nl == std::string::npos ? 0 : last_nl + 1;
    if (keep != content.size()) {
      std::filesystem::resize_file(log_path, keep);
      content.resize(keep);
    }
    std::istringstream lines(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
      ++line_no;
      if (line.empty()) {
        continue;
      }
      try {
        const auto j = nlohmann::json::parse(line);
        const auto op = j.at("op").get<std::string>();
        if (op == "register") {
          Assignment a;
          a.rater_id = j.at("rater_id").get<std::string>();
          a.token = j.at("token").get<std::string>();
          a.image_ids = j.at("images").get<std::vector<std::string>>();
          apply_register(std::move(a));
        } else if (op == "rate") {
          apply_rating(j.at("rater_id").get<std::string>(), j.at("image_id").get<std::string>(),
            scores_from_json(j.at("scores"), j.at("direction")));
        } else {
          throw Error(ErrorCode::kParseError, "unknown op " + op);
        }
      } catch (const nlohmann::json::exception & e) {
        throw Error(ErrorCode::kParseError,
          fmt::format("{}:{}: {}", log_path.string(), line_no, e.what()));
      } catch (const Error & e) {
        throw Error(ErrorCode::kParseError,
          fmt::format("{}:{}: {}", log_path.string(), line_no, e.what()));
      }
    }
  }
  log_ = std::make_unique<Log>(log_path);
}

RaterStudy::~RaterStudy() = default;

void RaterStudy::apply_register(Assignment a)
{
  if (raters_.count(a.rater_id) != 0) {
    throw Error(ErrorCode::kDuplicateRater, "rater " + a.rater_id + " already registered");
  }
  for (const auto & id : a.image_ids) {
    const auto it = assigned_.find(id);
    if (it == assigned_.end()) {
      throw Error(ErrorCode::kInvalidArgument, "assignment references unknown image " + id);
    }
    ++it->second;
  }
  std::string id = a.rater_id;
  raters_.emplace(std::move(id), std::move(a));
}

void RaterStudy::apply_rating(
  const std::string & rater_id, const std::string & image_id, const SubmittedScores & scores)
{
  auto it = raters_.find(rater_id);
  if (it == raters_.end()) {
    throw Error(ErrorCode::kUnknownRater, "unknown rater " + rater_id);
  }
  Assignment & a = it->second;
  if (a.cursor >= a.image_ids.size()) {
    throw Error(ErrorCode::kWrongImage,
      fmt::format("rater {} has completed the assignment; {} not expected", rater_id, image_id));
  }
  if (a.image_ids[a.cursor] != image_id) {
    throw Error(ErrorCode::kWrongImage,
      fmt::format("rater {} is at image {}, not {}", rater_id, a.image_ids[a.cursor], image_id));
  }
  check_scores(scores);
  const ImageKind kind = images_.at(image_id)->kind;
  for (TwstrsItem item : kAllItems) {
    records_.push_back({rater_id, image_id, item, scores[item], kind});
  }
  ++a.cursor;
}

Assignment RaterStudy::register_rater(const std::string & rater_id)
{
  if (rater_id.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "rater_id must not be empty");
  }
  std::unique_lock lock(mu_);
  if (raters_.count(rater_id) != 0) {
    throw Error(ErrorCode::kDuplicateRater, "rater " + rater_id + " already registered");
  }

  std::array<std::vector<std::string>, 2> picked;
  for (ImageKind kind : {ImageKind::kAvatar, ImageKind::kReal}) {
    std::vector<std::pair<int, std::string>> pool;
    for (const auto & img : manifest_.images) {
      if (img.kind == kind) {
        pool.emplace_back(assigned_.at(img.image_id), img.image_id);
      }
    }
    std::sort(pool.begin(), pool.end());
    auto & out = picked[static_cast<std::size_t>(kind)];
    for (int i = 0; i < manifest_.quota(kind); ++i) {
      out.push_back(pool[static_cast<std::size_t>(i)].second);
    }
  }

  Assignment a;
  a.rater_id = rater_id;
  a.token = new_token();
  const auto & av = picked[0];
  const auto & re = picked[1];
  for (std::size_t i = 0; i < std::max(av.size(), re.size()); ++i) {
    if (i < av.size()) {a.image_ids.push_back(av[i]);}
    if (i < re.size()) {a.image_ids.push_back(re[i]);}
  }

  nlohmann::json j;
  j["op"] = "register";
  j["rater_id"] = a.rater_id;
  j["token"] = a.token;
  j["images"] = a.image_ids;
  log_->append(j.dump());
  apply_register(a);
  return a;
}

std::optional<ImageTask> RaterStudy::next_image(const std::string & rater_id) const
{
  std::shared_lock lock(mu_);
  const auto it = raters_.find(rater_id);
  if (it == raters_.end()) {
    throw Error(ErrorCode::kUnknownRater, "unknown rater " + rater_id);
  }
  const Assignment & a = it->second;
  if (a.cursor >= a.image_ids.size()) {
    return std::nullopt;
  }
  return ImageTask{*images_.at(a.image_ids[a.cursor]), a.cursor, a.image_ids.size()};
}

std::size_t RaterStudy::submit_rating(
  const std::string & rater_id, const std::string & image_id, const SubmittedScores & scores_in)
{
  SubmittedScores scores = scores_in;
  if (scores[TwstrsItem::kAnteroRetrocollis] == 0) {
    scores.direction = AnteroRetroDirection::kNone;
  }
  std::unique_lock lock(mu_);
  const auto it = raters_.find(rater_id);
  if (it == raters_.end()) {
    throw Error(ErrorCode::kUnknownRater, "unknown rater " + rater_id);
  }
  const Assignment & a = it->second;
  if (a.cursor >= a.image_ids.size() || a.image_ids[a.cursor] != image_id) {
    throw Error(ErrorCode::kWrongImage,
      fmt::format("image {} is not the current task of rater {}", image_id, rater_id));
  }
  check_scores(scores);

  nlohmann::json j;
  j["op"] = "rate";
  j["rater_id"] = rater_id;
  j["image_id"] = image_id;
  j["scores"] = scores_json(scores);
  j["direction"] = std::string(to_string(scores.direction));
  log_->append(j.dump());
  apply_rating(rater_id, image_id, scores);
  return it->second.cursor;
}

bool RaterStudy::check_token(const std::string & rater_id, const std::string & token) const
{
  std::shared_lock lock(mu_);
  const auto it = raters_.find(rater_id);
  return it != raters_.end() && !token.empty() && it->second.token == token;
}

std::optional<Assignment> RaterStudy::assignment(const std::string & rater_id) const
{
  std::shared_lock lock(mu_);
  const auto it = raters_.find(rater_id);
  if (it == raters_.end()) {
    return std::nullopt;
  }
  return it->second;
}

std::vector<RatingRecord> RaterStudy::records() const
{
  std::shared_lock lock(mu_);
  return records_;
}

std::map<std::string, int> RaterStudy::assignment_counts() const
{
  std::shared_lock lock(mu_);
  return assigned_;
}

std::size_t RaterStudy::rater_count() const
{
  std::shared_lock lock(mu_);
  return raters_.size();
}

AgreementSnapshot RaterStudy::agreement_snapshot(std::size_t n_iter, std::uint64_t seed) const
{
  const std::vector<RatingRecord> recs = records();
  AgreementSnapshot snap;
  snap.total_ratings = recs.size();

  std::map<std::string, std::set<std::string>> raters_per_image;
  for (const auto & r : recs) {
    raters_per_image[r.image_id].insert(r.rater_id);
  }
  for (const auto & img : manifest_.images) {
    const auto it = raters_per_image.find(img.image_id);
    ++snap.ratings_per_image_histogram[it == raters_per_image.end() ? 0 : it->second.size()];
  }

  for (std::optional<ImageKind> kind :
    {std::optional<ImageKind>(ImageKind::kAvatar), std::optional<ImageKind>(ImageKind::kReal),
      std::optional<ImageKind>()})
  {
    const RatingMatrix m = RatingMatrix::from_records(recs, kind);
    for (TwstrsItem item : kAllItems) {
      AgreementCell cell;
      cell.item = item;
      cell.kind = kind;
      cell.n_ratings = m.rating_count(item);
      try {
        cell.result = bootstrap_alpha_ci(m, item, default_metric(item), n_iter, seed);
      } catch (const Error & e) {
        if (e.code() != ErrorCode::kInsufficientData) {
          throw;
        }
        cell.error = e.what();
      }
      snap.cells.push_back(std::move(cell));
    }
  }
  return snap;
}

}  // namespace cdpose
