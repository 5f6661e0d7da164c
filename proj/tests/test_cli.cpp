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

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cdpose/dataset_io.hpp"
#include "cdpose/stats.hpp"
#include "cdpose/twstrs.hpp"

#include <httplib.h>

using namespace cdpose;
using nlohmann::json;
namespace fs = std::filesystem;

namespace
{

struct Run
{
  int status = -1;
  std::string output;
};

/// Runs the CLI with the given arguments; stdout and stderr are merged.
Run run_cli_bin(const std::string & args)
{
  const std::string cmd = std::string(CDPOSE_BIN) + " " + args + " 2>&1";
  FILE * pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  Run r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) {
    r.output.append(buf.data(), n);
  }
  const int raw = ::pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

fs::path workdir(const std::string & name)
{
  const fs::path dir = fs::temp_directory_path() / fmt::format("cdpose_cli_{}", ::getpid()) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path & p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t count_lines(const fs::path & p)
{
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) {
    n += !line.empty();
  }
  return n;
}

void write_file(const fs::path & p, const std::string & text)
{
  std::ofstream(p, std::ios::binary) << text;
}

/// Predictions that reproduce the ground truth exactly.
void write_truth_predictions(const fs::path & dataset, const fs::path & out)
{
  std::ofstream f(out);
  for (const auto & l : read_dataset(dataset)) {
    f << json{{"scene_id", l.scene_id}, {"score", l.pose.shift}, {"yaw", l.composed.yaw},
      {"pitch", l.composed.pitch}, {"roll", l.composed.roll}}.dump() << '\n';
  }
}

json item_entry(const json & report, const std::string & item)
{
  for (const auto & e : report.at("items")) {
    if (e.at("item") == item) {
      return e;
    }
  }
  FAIL("missing item " << item);
  return {};
}

}  // namespace

TEST_CASE("version and argument errors") {
  const Run v = run_cli_bin("--version");
  CHECK(v.status == 0);
  CHECK(v.output.find("0.1.0") != std::string::npos);
  CHECK(run_cli_bin("").status == 2);
  CHECK(run_cli_bin("frobnicate").status == 2);
  const auto dir = workdir("args");
  CHECK(run_cli_bin(fmt::format("generate --count 0 --out {}", dir.string())).status == 2);
  CHECK(run_cli_bin(fmt::format("generate --count -3 --out {}", dir.string())).status == 2);
  CHECK(run_cli_bin(fmt::format("generate --count 10 --zero-prob 1.5 --out {}", dir.string())).status == 2);
  CHECK(run_cli_bin("generate --out x").status == 2);
}

TEST_CASE("generate is deterministic") {
  const auto a = workdir("gen_a");
  const auto b = workdir("gen_b");
  REQUIRE(run_cli_bin(fmt::format("generate --count 100 --seed 7 --out {}", a.string())).status == 0);
  REQUIRE(run_cli_bin(fmt::format("generate --count 100 --seed 7 --out {}", b.string())).status == 0);
  CHECK(count_lines(a / "dataset.jsonl") == 100);
  CHECK(slurp(a / "dataset.jsonl") == slurp(b / "dataset.jsonl"));
  const json manifest = json::parse(slurp(a / "manifest.json"));
  CHECK(manifest.at("command") == "generate");
  CHECK(manifest.at("parameters").at("seed") == 7);
  CHECK(manifest.at("modules").size() == 8);

  const auto c = workdir("gen_c");
  REQUIRE(run_cli_bin(fmt::format("generate --count 100 --seed 8 --out {}", c.string())).status == 0);
  CHECK(slurp(a / "dataset.jsonl") != slurp(c / "dataset.jsonl"));
}

TEST_CASE("render writes masks deterministically") {
  const auto dir = workdir("render");
  REQUIRE(run_cli_bin(fmt::format("generate --count 10 --seed 3 --out {}", dir.string())).status == 0);
  const auto ds = dir / "dataset.jsonl";
  REQUIRE(run_cli_bin(fmt::format("render --dataset {} --out {} --seed 11", ds.string(),
    (dir / "m1").string())).status == 0);
  REQUIRE(run_cli_bin(fmt::format("render --dataset {} --out {} --seed 11", ds.string(),
    (dir / "m2").string())).status == 0);
  std::size_t pgms = 0;
  for (const auto & e : fs::directory_iterator(dir / "m1")) {
    if (e.path().extension() == ".pgm") {
      ++pgms;
      CHECK(slurp(e.path()) == slurp(dir / "m2" / e.path().filename()));
    }
  }
  CHECK(pgms == 10);
  CHECK(count_lines(dir / "m1" / "masks.jsonl") == 10);
  CHECK(slurp(dir / "m1" / "masks.jsonl") == slurp(dir / "m2" / "masks.jsonl"));
  CHECK(fs::exists(dir / "m1" / "manifest.json"));

  std::string text = slurp(ds);
  const auto third = text.find('\n', text.find('\n', text.find('\n') + 1) + 1);
  text.insert(third + 1, "{\"scene_id\": \"broken\"\n");
  write_file(dir / "bad.jsonl", text);
  const Run bad = run_cli_bin(fmt::format("render --dataset {} --out {}", (dir / "bad.jsonl").string(),
    (dir / "m3").string()));
  CHECK(bad.status == 3);
  CHECK(bad.output.find(":4:") != std::string::npos);

  CHECK(run_cli_bin(fmt::format("render --dataset {} --out {}", (dir / "missing.jsonl").string(),
    (dir / "m4").string())).status == 2);
}

TEST_CASE("calibrate, predict and evaluate") {
  const auto dir = workdir("pipeline");
  REQUIRE(run_cli_bin(fmt::format("generate --count 60 --seed 5 --sigma 1 --out {}",
    dir.string())).status == 0);
  const auto ds = (dir / "dataset.jsonl").string();
  const auto model = (dir / "model.json").string();
  const Run cal = run_cli_bin(fmt::format("calibrate --dataset {} --seed 2 --out {}", ds, model));
  REQUIRE(cal.status == 0);
  CHECK(json::parse(slurp(model)).contains("slope"));
  CHECK(fs::exists(model + ".manifest.json"));
  const auto preds = (dir / "preds.jsonl").string();
  REQUIRE(run_cli_bin(fmt::format("predict --dataset {} --seed 2 --model {} --out {}", ds, model,
    preds)).status == 0);
  CHECK(count_lines(preds) == 60);
  const Run ev = run_cli_bin(fmt::format("evaluate --mode avatar --predictions {} --dataset {} --model {} --out {}",
      preds, ds, model, (dir / "eval.json").string()));
  REQUIRE(ev.status == 0);
  const json report = json::parse(slurp(dir / "eval.json"));
  CHECK(item_entry(report, "lateral_shift").at("available") == true);
  CHECK(item_entry(report, "torticollis").at("available") == false);
  CHECK(run_cli_bin(fmt::format("evaluate --mode avatar --predictions {} --dataset {} --model {} --threshold 0.1",
    preds, ds, model)).status == 2);
}

TEST_CASE("evaluate against exact predictions") {
  const auto dir = workdir("exact");
  REQUIRE(run_cli_bin(fmt::format("generate --count 300 --seed 9 --out {}", dir.string())).status == 0);
  const auto ds = dir / "dataset.jsonl";
  write_truth_predictions(ds, dir / "truth.jsonl");
  const Run ev = run_cli_bin(fmt::format("evaluate --mode avatar --predictions {} --dataset {}",
      (dir / "truth.jsonl").string(), ds.string()));
  REQUIRE(ev.status == 0);
  const json report = json::parse(ev.output);
  CHECK(report.contains("manifest"));
  for (const auto & e : report.at("items")) {
    CHECK(e.at("available") == true);
    CHECK(e.at("exact_accuracy").get<double>() == 1.0);
    CHECK(e.at("metrics").at("accuracy").get<double>() == 1.0);
    if (!e.at("metrics").at("tpr").is_null()) {
      CHECK(e.at("metrics").at("tpr").get<double>() == 1.0);
    }
  }
  CHECK(item_entry(report, "lateral_shift").at("pearson_r").get<double>() ==
    doctest::Approx(1.0).epsilon(1e-12));

  // Ratings that equal the predicted ordinal scores give r = 1 per item.
  const auto labels = read_dataset(ds);
  std::vector<RatingRecord> ratings;
  for (const auto & l : labels) {
    for (TwstrsItem item : kAllItems) {
      for (const char * rater : {"a", "b"}) {
        const int value = item == TwstrsItem::kLateralShift ?
          static_cast<int>(l.pose.shift >= 0.2) : l.assessment.score(item);
        ratings.push_back({rater, l.scene_id, item, value, ImageKind::kAvatar});
      }
    }
  }
  {
    std::ofstream csv(dir / "ratings.csv");
    write_ratings_csv(csv, ratings);
  }
  {
    std::ofstream f(dir / "clinical.jsonl");
    for (const auto & l : labels) {
      f << json{{"scene_id", l.scene_id}, {"score", l.pose.shift >= 0.2 ? 1.0 : 0.0},
        {"yaw", l.composed.yaw}, {"pitch", l.composed.pitch}, {"roll", l.composed.roll}}.dump()
        << '\n';
    }
  }
  const Run clin = run_cli_bin(fmt::format("evaluate --mode clinical --predictions {} --ratings {}",
      (dir / "clinical.jsonl").string(), (dir / "ratings.csv").string()));
  REQUIRE(clin.status == 0);
  const json clinical = json::parse(clin.output);
  CHECK(clinical.at("n_images") == 300);
  for (const auto & e : clinical.at("items")) {
    CHECK(e.at("pearson_r").get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  }

  // Drop two predictions: the id mismatch is a data error that names the counts.
  std::string text = slurp(dir / "truth.jsonl");
  text.erase(0, text.find('\n') + 1);
  text.erase(0, text.find('\n') + 1);
  write_file(dir / "short.jsonl", text);
  const Run mismatch = run_cli_bin(fmt::format("evaluate --mode avatar --predictions {} --dataset {}",
      (dir / "short.jsonl").string(), ds.string()));
  CHECK(mismatch.status == 3);
  CHECK(mismatch.output.find("2 of 300") != std::string::npos);
}

TEST_CASE("agreement report") {
  const auto dir = workdir("agreement");
  std::vector<RatingRecord> perfect;
  for (int i = 0; i < 20; ++i) {
    for (const char * rater : {"a", "b", "c"}) {
      for (TwstrsItem item : kAllItems) {
        perfect.push_back({rater, fmt::format("img-{}", i), item,
            (i * 3 + static_cast<int>(item)) % (max_score(item) + 1),
            i % 2 ? ImageKind::kReal : ImageKind::kAvatar});
      }
    }
  }
  {
    std::ofstream csv(dir / "perfect.csv");
    write_ratings_csv(csv, perfect);
  }
  const Run run = run_cli_bin(fmt::format("agreement --ratings {} --n-bootstrap 200",
      (dir / "perfect.csv").string()));
  REQUIRE(run.status == 0);
  const json report = json::parse(run.output);
  CHECK(report.at("groups").size() == 3);
  for (const auto & g : report.at("groups")) {
    for (const auto & cell : g.at("items")) {
      CHECK(cell.at("alpha").get<double>() == doctest::Approx(1.0));
      CHECK(cell.at("ci").at(0).get<double>() == doctest::Approx(1.0));
      CHECK(cell.at("ci").at(1).get<double>() == doctest::Approx(1.0));
    }
  }

  // Noisy ratings: the report matches direct library calls and is seed-deterministic.
  std::vector<RatingRecord> noisy = perfect;
  for (std::size_t k = 0; k < noisy.size(); k += 7) {
    noisy[k].value = noisy[k].value == 0 ? 1 : 0;
  }
  {
    std::ofstream csv(dir / "noisy.csv");
    write_ratings_csv(csv, noisy);
  }
  const auto cmd = fmt::format("agreement --ratings {} --n-bootstrap 300 --seed 17",
      (dir / "noisy.csv").string());
  const Run first = run_cli_bin(cmd);
  const Run second = run_cli_bin(cmd);
  REQUIRE(first.status == 0);
  CHECK(first.output == second.output);
  const json noisy_report = json::parse(first.output);
  const RatingMatrix all = RatingMatrix::from_records(noisy, std::nullopt);
  const auto direct = bootstrap_alpha_ci(all, TwstrsItem::kTorticollis,
      default_metric(TwstrsItem::kTorticollis), 300, 17);
  const json & cell = noisy_report.at("groups").at(2).at("items").at(0);
  CHECK(cell.at("alpha").get<double>() == doctest::Approx(direct.alpha).epsilon(1e-12));
  CHECK(cell.at("ci").at(0).get<double>() == doctest::Approx(direct.ci_low).epsilon(1e-12));
  CHECK(cell.at("ci").at(1).get<double>() == doctest::Approx(direct.ci_high).epsilon(1e-12));

  write_file(dir / "bad.csv", "rater_id,image_id,image_kind,item,value\na,x,avatar,torticollis,9\n");
  CHECK(run_cli_bin(fmt::format("agreement --ratings {}", (dir / "bad.csv").string())).status == 3);
}

TEST_CASE("timeline") {
  const auto dir = workdir("timeline");
  {
    std::ofstream f(dir / "frames.jsonl");
    for (int i = 0; i < 2710; ++i) {
      const double t = i * 0.1;
      f << json{{"t", t}, {"yaw", 2.0 * t}, {"pitch", 0.0}, {"roll", 0.0}, {"shift", 0.0}}.dump()
        << '\n';
    }
  }
  const auto csv = dir / "tasks.csv";
  const Run run = run_cli_bin(fmt::format("timeline --predictions {} --csv {}",
      (dir / "frames.jsonl").string(), csv.string()));
  REQUIRE(run.status == 0);
  const json report = json::parse(run.output);
  CHECK(report.at("n_frames") == 2710);
  CHECK(report.at("summaries").size() > 0);
  CHECK(count_lines(csv) == report.at("summaries").size() + 1);

  write_file(dir / "unsorted.jsonl",
    "{\"t\":1.0,\"yaw\":0,\"pitch\":0,\"roll\":0,\"shift\":0}\n"
    "{\"t\":0.5,\"yaw\":0,\"pitch\":0,\"roll\":0,\"shift\":0}\n");
  const Run bad = run_cli_bin(fmt::format("timeline --predictions {}",
      (dir / "unsorted.jsonl").string()));
  CHECK(bad.status == 3);
}

TEST_CASE("serve runs until SIGTERM") {
  const auto dir = workdir("serve");
  write_file(dir / "empty.json", R"({"per_rater_quota": {"avatar": 0, "real": 0}, "images": []})");
  CHECK(run_cli_bin(fmt::format("serve --manifest {} --store {} --port 0",
    (dir / "empty.json").string(), (dir / "s0.jsonl").string())).status != 0);

  write_file(dir / "study.json", R"({"per_rater_quota": {"avatar": 1, "real": 1},
    "images": [{"image_id": "a", "image_kind": "avatar", "front_uri": "f", "side_uri": "s"},
               {"image_id": "b", "image_kind": "real", "front_uri": "f", "side_uri": "s"}]})");
  const std::string store = (dir / "store.jsonl").string();
  int out[2];
  REQUIRE(::pipe(out) == 0);
  const pid_t child = ::fork();
  REQUIRE(child >= 0);
  if (child == 0) {
    ::dup2(out[1], STDOUT_FILENO);
    ::close(out[0]);
    ::close(out[1]);
    const std::string manifest = (dir / "study.json").string();
    ::execl(CDPOSE_BIN, CDPOSE_BIN, "serve", "--manifest", manifest.c_str(), "--store",
      store.c_str(), "--port", "0", "--n-bootstrap", "20", static_cast<char *>(nullptr));
    ::_exit(127);
  }
  ::close(out[1]);
  FILE * stream = ::fdopen(out[0], "r");
  char line[256] = {0};
  REQUIRE(std::fgets(line, sizeof line, stream) != nullptr);
  const std::string banner(line);
  REQUIRE(banner.find("listening on http://") != std::string::npos);
  const int port = std::stoi(banner.substr(banner.rfind(':') + 1));

  httplib::Client c("127.0.0.1", port);
  auto health = c.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  auto reg = c.Post("/raters", R"({"rater_id": "r"})", "application/json");
  REQUIRE(reg);
  CHECK(reg->status == 201);

  ::kill(child, SIGTERM);
  int status = 0;
  ::waitpid(child, &status, 0);
  std::fclose(stream);
  CHECK(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 0);
  CHECK(count_lines(store) == 1);
  CHECK(fs::exists(store + ".manifest.json"));
}
