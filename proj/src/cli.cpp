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

#include "cdpose/cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cdpose/avatar.hpp"
#include "cdpose/dataset_io.hpp"
#include "cdpose/error.hpp"
#include "cdpose/protocol.hpp"
#include "cdpose/rater_http.hpp"
#include "cdpose/rater_service.hpp"
#include "cdpose/report.hpp"
#include "cdpose/sampler.hpp"
#include "cdpose/shift.hpp"
#include "cdpose/stats.hpp"

namespace cdpose
{

namespace fs = std::filesystem;
using nlohmann::json;

namespace
{

constexpr const char * kDatasetFile = "dataset.jsonl";
constexpr const char * kMaskManifestFile = "masks.jsonl";
constexpr const char * kRunManifestFile = "manifest.json";

json run_manifest(const std::string & command, const json & parameters)
{
  json modules = json::object();
  for (const char * m : {"rotation_core", "synth_sampler", "avatar_geom", "shift_pipeline",
      "eval_stats", "protocol", "rater_service", "cli"})
  {
    modules[m] = kVersion;
  }
  return {{"tool", "cdpose"}, {"version", kVersion}, {"command", command},
    {"parameters", parameters}, {"modules", modules}};
}

void write_text(const fs::path & path, const std::string & text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot write " + path.string());
  }
  out << text;
  if (!out) {
    throw Error(ErrorCode::kIo, "write failed: " + path.string());
  }
}

void ensure_dir(const fs::path & dir)
{
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCode::kIo, "cannot create directory " + dir.string());
  }
}

/// Report to --out (plus a sidecar manifest) or to stdout with the manifest embedded.
void emit_report(json report, const json & manifest, const std::string & out)
{
  if (out.empty() || out == "-") {
    report["manifest"] = manifest;
    std::cout << report.dump(2) << '\n';
    return;
  }
  write_text(out, report.dump(2) + "\n");
  write_text(out + ".manifest.json", manifest.dump(2) + "\n");
}

/// Re-raises `e` with the scene id prepended, keeping its code.
[[noreturn]] void rethrow_for_scene(const Error & e, const std::string & scene_id)
{
  throw Error(e.code(), scene_id + ": " + e.what());
}

struct FeatureSet
{
  std::vector<std::string> ids;
  std::vector<double> features;
  std::vector<double> truths;
  std::vector<int> labels;
};

void add_feature(FeatureSet & fs_, const LabeledMask & mask)
{
  double f = 0.0;
  try {
    f = geometric_shift_feature(preprocess(mask));
  } catch (const Error & e) {
    rethrow_for_scene(e, mask.truth.scene_id);
  }
  fs_.ids.push_back(mask.truth.scene_id);
  fs_.features.push_back(f);
  fs_.truths.push_back(mask.truth.pose.shift);
  fs_.labels.push_back(mask.truth.assessment.lateral_shift);
}

FigureParams scene_params(std::uint64_t seed, std::size_t index, double jitter)
{
  FigureParams p;
  p.appearance_seed = scene_appearance_seed(seed, index);
  p.jitter = jitter;
  return p;
}

/// Features from rendered masks on disk or from a dataset rendered in memory.
FeatureSet load_features(const std::string & masks_dir, const std::string & dataset,
  std::uint64_t seed, double jitter)
{
  FeatureSet out;
  if (!masks_dir.empty()) {
    for (const auto & entry : read_mask_manifest(fs::path(masks_dir) / kMaskManifestFile)) {
      add_feature(out, load_mask(masks_dir, entry));
    }
    return out;
  }
  const auto labels = read_dataset(dataset);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    LabeledMask mask;
    try {
      mask = render_mask(labels[i], scene_params(seed, i, jitter));
    } catch (const Error & e) {
      rethrow_for_scene(e, labels[i].scene_id);
    }
    add_feature(out, mask);
  }
  return out;
}

/// Throws ParseError with counts when the two id sets differ.
void check_id_sets(const std::set<std::string> & predicted, const std::set<std::string> & reference,
  const std::string & reference_name)
{
  std::size_t missing = 0;
  std::size_t extra = 0;
  for (const auto & id : reference) {
    missing += predicted.count(id) == 0;
  }
  for (const auto & id : predicted) {
    extra += reference.count(id) == 0;
  }
  if (missing || extra) {
    throw Error(ErrorCode::kParseError, fmt::format(
        "id sets differ: {} of {} {} ids have no prediction, {} of {} predictions are not in {}",
        missing, reference.size(), reference_name, extra, predicted.size(), reference_name));
  }
}

/// Predictions must carry angles on every line or on none.
bool predictions_have_angles(const std::vector<PredictionRecord> & preds)
{
  std::size_t with = 0;
  for (const auto & p : preds) {
    with += p.angles.has_value();
  }
  if (with != 0 && with != preds.size()) {
    throw Error(ErrorCode::kParseError,
      fmt::format("{} of {} predictions carry angles; need all or none", with, preds.size()));
  }
  return with != 0 && with == preds.size();
}

json pearson_or_error(const std::vector<double> & x, const std::vector<double> & y, json & entry)
{
  try {
    return pearson_r(x, y);
  } catch (const Error & e) {
    entry["pearson_error"] = to_string(e.code());
    return nullptr;
  }
}

json evaluate_avatar(const std::vector<PredictionRecord> & preds,
  const std::vector<GroundTruthLabel> & truth, double threshold)
{
  std::map<std::string, const GroundTruthLabel *> by_id;
  for (const auto & t : truth) {
    by_id[t.scene_id] = &t;
  }
  std::set<std::string> pred_ids;
  for (const auto & p : preds) {
    pred_ids.insert(p.scene_id);
  }
  std::set<std::string> truth_ids;
  for (const auto & [id, _] : by_id) {
    truth_ids.insert(id);
  }
  check_id_sets(pred_ids, truth_ids, "dataset");
  const bool angles = predictions_have_angles(preds);

  json items = json::array();
  for (TwstrsItem item : kAllItems) {
    json entry = {{"item", to_string(item)}};
    const bool shift = item == TwstrsItem::kLateralShift;
    if (!shift && !angles) {
      entry["available"] = false;
      items.push_back(entry);
      continue;
    }
    std::vector<int> pred_present;
    std::vector<int> true_present;
    std::vector<double> pred_value;
    std::vector<double> true_value;
    std::size_t exact = 0;
    for (const auto & p : preds) {
      const GroundTruthLabel & t = *by_id.at(p.scene_id);
      const int binary = p.score >= threshold ? 1 : 0;
      int pred_score = binary;
      if (!shift) {
        pred_score = angles_to_twstrs(*p.angles, binary != 0).score(item);
      }
      const int true_score = t.assessment.score(item);
      pred_present.push_back(pred_score > 0);
      true_present.push_back(true_score > 0);
      exact += pred_score == true_score;
      pred_value.push_back(shift ? p.score : pred_score);
      true_value.push_back(shift ? t.pose.shift : true_score);
    }
    const auto m = classification_metrics(pred_present, true_present);
    entry["available"] = true;
    entry["metrics"] = metrics_json(m);
    entry["exact_accuracy"] = static_cast<double>(exact) / static_cast<double>(preds.size());
    entry["pearson_r"] = pearson_or_error(pred_value, true_value, entry);
    items.push_back(entry);
  }
  return {{"mode", "avatar"}, {"n", preds.size()}, {"threshold", number_or_null(threshold)},
    {"items", items}};
}

json evaluate_clinical(const std::vector<PredictionRecord> & preds,
  const std::vector<RatingRecord> & ratings)
{
  std::map<std::string, const PredictionRecord *> by_id;
  std::set<std::string> pred_ids;
  for (const auto & p : preds) {
    by_id[p.scene_id] = &p;
    pred_ids.insert(p.scene_id);
  }
  std::set<std::string> rated_ids;
  for (const auto & r : ratings) {
    rated_ids.insert(r.image_id);
  }
  check_id_sets(pred_ids, rated_ids, "ratings");
  const bool angles = predictions_have_angles(preds);

  json items = json::array();
  for (TwstrsItem item : kAllItems) {
    json entry = {{"item", to_string(item)}};
    const bool shift = item == TwstrsItem::kLateralShift;
    if (!shift && !angles) {
      entry["available"] = false;
      items.push_back(entry);
      continue;
    }
    std::vector<double> predicted;
    std::vector<double> rated;
    for (const auto & [image_id, mean] : mean_ratings(ratings, item)) {
      const PredictionRecord & p = *by_id.at(image_id);
      predicted.push_back(shift ? p.score :
        angles_to_twstrs(*p.angles, false).score(item));
      rated.push_back(mean);
    }
    entry["available"] = true;
    entry["n"] = predicted.size();
    entry["pearson_r"] = pearson_or_error(predicted, rated, entry);
    items.push_back(entry);
  }
  return {{"mode", "clinical"}, {"n_images", rated_ids.size()}, {"items", items}};
}

json agreement_report(const std::vector<RatingRecord> & records, std::size_t n_iter,
  std::uint64_t seed)
{
  json groups = json::array();
  const std::vector<std::pair<std::string, std::optional<ImageKind>>> kinds = {
    {"avatar", ImageKind::kAvatar}, {"real", ImageKind::kReal}, {"all", std::nullopt}};
  for (const auto & [name, kind] : kinds) {
    const RatingMatrix m = RatingMatrix::from_records(records, kind);
    json items = json::array();
    for (TwstrsItem item : kAllItems) {
      try {
        json cell = agreement_json(item, bootstrap_alpha_ci(m, item, default_metric(item),
          n_iter, seed));
        cell["n_ratings"] = m.rating_count(item);
        items.push_back(cell);
      } catch (const Error & e) {
        if (e.code() != ErrorCode::kInsufficientData) {
          throw;
        }
        items.push_back({{"item", to_string(item)}, {"alpha", nullptr},
            {"metric", to_string(default_metric(item))}, {"n_ratings", m.rating_count(item)},
            {"error", to_string(e.code())}});
      }
    }
    groups.push_back({{"image_kind", name}, {"items", items}});
  }
  return {{"n_bootstrap", n_iter}, {"seed", seed}, {"groups", groups}};
}

std::string csv_cell(const std::optional<double> & v)
{
  return v ? fmt::format("{}", *v) : std::string();
}

std::string summaries_csv(const std::vector<TaskSummary> & summaries)
{
  std::string out = "task,kind,start_s,end_s,n_frames,yaw_range,roll_range,pitch_range,"
    "yaw_drift_slope,mean_shift,peak_abs_yaw,peak_abs_roll\n";
  for (const auto & s : summaries) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", s.task.name, to_string(s.task.kind),
      s.task.start_s, s.task.end_s, s.n_frames, csv_cell(s.yaw_range), csv_cell(s.roll_range),
      csv_cell(s.pitch_range), csv_cell(s.yaw_drift_slope), csv_cell(s.mean_shift),
      csv_cell(s.peak_abs_yaw), csv_cell(s.peak_abs_roll));
  }
  return out;
}

int serve(RaterStudy & study, const std::string & host, int port, std::size_t snapshot_iter)
{
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  RaterServer server(study, snapshot_iter);
  const int bound = server.bind(host, port);
  std::thread waiter([&server, signals]() {
      int sig = 0;
      sigwait(&signals, &sig);
      server.stop();
    });
  std::cout << fmt::format("listening on http://{}:{}", host, bound) << std::endl;
  server.serve();
  // serve() can also return on its own; wake the waiter so it can exit.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  std::cout << fmt::format("stopped; {} ratings on record", study.records().size()) << std::endl;
  return kExitOk;
}

int exit_code_for(const Error & e)
{
  if (e.code() == ErrorCode::kInvalidArgument) {
    return kExitArgument;
  }
  return is_data_error(e.code()) ? kExitData : kExitRuntime;
}

}  // namespace

int run_cli(int argc, char ** argv)
{
  CLI::App app{"Cervical dystonia pose toolkit: synthetic data, shift estimation, statistics "
    "and the rating service."};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  // generate
  SamplerConfig gen;
  std::string gen_out;
  std::string gen_dist = "uniform";
  auto * generate = app.add_subcommand("generate", "Sample a synthetic ground-truth dataset");
  generate->add_option("--count", gen.count, "Number of scenes")->required();
  generate->add_option("--seed", gen.seed, "Base seed")->capture_default_str();
  generate->add_option("--out", gen_out, "Output directory")->required();
  generate->add_option("--sigma", gen.sigma_deg, "Angle std in degrees")->capture_default_str();
  generate->add_option("--zero-prob", gen.zero_prob, "Probability of a zero angle")
  ->capture_default_str();
  generate->add_option("--shift-distribution", gen_dist)
  ->check(CLI::IsMember({"uniform", "fixed"}))->capture_default_str();
  generate->add_option("--shift-levels", gen.shift_levels, "Levels for the fixed distribution");
  generate->add_option("--shift-threshold", gen.shift_positive_threshold,
    "Shift labeled present at or above this value")->capture_default_str();

  // render
  std::string render_dataset;
  std::string render_out;
  std::uint64_t render_seed = 0;
  double render_jitter = FigureParams{}.jitter;
  auto * render = app.add_subcommand("render", "Rasterize segmentation masks for a dataset");
  render->add_option("--dataset", render_dataset)->required()->check(CLI::ExistingFile);
  render->add_option("--out", render_out, "Output directory")->required();
  render->add_option("--seed", render_seed, "Base appearance seed")->capture_default_str();
  render->add_option("--jitter", render_jitter, "Relative proportion jitter")
  ->capture_default_str();

  // calibrate
  std::string cal_masks;
  std::string cal_dataset;
  std::string cal_out;
  std::uint64_t cal_seed = 0;
  double cal_jitter = FigureParams{}.jitter;
  auto * calibrate_cmd = app.add_subcommand("calibrate",
      "Fit the geometric shift estimator and its decision threshold");
  auto * cal_m = calibrate_cmd->add_option("--masks", cal_masks, "Rendered mask directory")
    ->check(CLI::ExistingDirectory);
  auto * cal_d = calibrate_cmd->add_option("--dataset", cal_dataset,
      "Dataset rendered in memory")->check(CLI::ExistingFile);
  cal_m->excludes(cal_d);
  calibrate_cmd->add_option("--seed", cal_seed, "Appearance seed with --dataset")
  ->capture_default_str();
  calibrate_cmd->add_option("--jitter", cal_jitter)->capture_default_str();
  calibrate_cmd->add_option("--out", cal_out, "Model file")->required();

  // predict
  std::string pred_masks;
  std::string pred_dataset;
  std::string pred_model;
  std::string pred_out;
  std::uint64_t pred_seed = 0;
  double pred_jitter = FigureParams{}.jitter;
  auto * predict = app.add_subcommand("predict", "Score lateral shift with a calibrated model");
  auto * pred_m = predict->add_option("--masks", pred_masks)->check(CLI::ExistingDirectory);
  auto * pred_d = predict->add_option("--dataset", pred_dataset)->check(CLI::ExistingFile);
  pred_m->excludes(pred_d);
  predict->add_option("--seed", pred_seed, "Appearance seed with --dataset")
  ->capture_default_str();
  predict->add_option("--jitter", pred_jitter)->capture_default_str();
  predict->add_option("--model", pred_model)->required()->check(CLI::ExistingFile);
  predict->add_option("--out", pred_out, "Prediction JSON-lines file")->required();

  // evaluate
  std::string ev_mode;
  std::string ev_predictions;
  std::string ev_dataset;
  std::string ev_ratings;
  std::string ev_model;
  std::optional<double> ev_threshold;
  std::string ev_out;
  auto * evaluate = app.add_subcommand("evaluate", "Score predictions against labels or ratings");
  evaluate->add_option("--mode", ev_mode)->required()
  ->check(CLI::IsMember({"avatar", "clinical"}));
  evaluate->add_option("--predictions", ev_predictions)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--dataset", ev_dataset, "Ground truth (avatar mode)")
  ->check(CLI::ExistingFile);
  evaluate->add_option("--ratings", ev_ratings, "Ratings CSV (clinical mode)")
  ->check(CLI::ExistingFile);
  auto * ev_m = evaluate->add_option("--model", ev_model, "Take the shift threshold from a model")
    ->check(CLI::ExistingFile);
  auto * ev_t = evaluate->add_option("--threshold", ev_threshold, "Shift decision threshold");
  ev_m->excludes(ev_t);
  evaluate->add_option("--out", ev_out, "Report file (default stdout)");

  // agreement
  std::string ag_ratings;
  std::size_t ag_iter = kDefaultBootstrapIterations;
  std::uint64_t ag_seed = 0;
  std::string ag_out;
  auto * agreement = app.add_subcommand("agreement", "Krippendorff alpha with bootstrap CIs");
  agreement->add_option("--ratings", ag_ratings)->required()->check(CLI::ExistingFile);
  agreement->add_option("--n-bootstrap", ag_iter)->capture_default_str()
  ->check(CLI::PositiveNumber);
  agreement->add_option("--seed", ag_seed)->capture_default_str();
  agreement->add_option("--out", ag_out, "Report file (default stdout)");

  // timeline
  std::string tl_predictions;
  bool tl_all = false;
  std::string tl_out;
  auto * timeline = app.add_subcommand("timeline", "Per-task analytics of a guided recording");
  timeline->add_option("--predictions", tl_predictions, "Frame predictions JSON lines")
  ->required()->check(CLI::ExistingFile);
  timeline->add_flag("--include-nonclinical", tl_all);
  timeline->add_option("--out", tl_out, "Report file (default stdout)");
  std::string tl_csv;
  timeline->add_option("--csv", tl_csv, "Also write the summaries as CSV");

  // serve
  std::string sv_host = "127.0.0.1";
  int sv_port = 8080;
  std::string sv_manifest;
  std::string sv_store;
  std::size_t sv_iter = kDefaultBootstrapIterations;
  auto * serve_cmd = app.add_subcommand("serve", "Run the rating-study HTTP service");
  serve_cmd->add_option("--host", sv_host)->capture_default_str();
  serve_cmd->add_option("--port", sv_port)->capture_default_str()->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--manifest", sv_manifest, "Study manifest JSON")->required()
  ->check(CLI::ExistingFile);
  serve_cmd->add_option("--store", sv_store, "Rating log (JSON lines)")->required();
  serve_cmd->add_option("--n-bootstrap", sv_iter, "Iterations for /agreement")
  ->capture_default_str()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitArgument;
  }

  try {
    if (generate->parsed()) {
      gen.shift_distribution = gen_dist == "fixed" ?
        ShiftDistribution::kFixedList : ShiftDistribution::kUniform01;
      gen.validate();
      const json params = {{"count", gen.count}, {"seed", gen.seed}, {"out", gen_out},
        {"sigma", gen.sigma_deg}, {"zero_prob", gen.zero_prob},
        {"shift_distribution", gen_dist}, {"shift_levels", gen.shift_levels},
        {"shift_threshold", gen.shift_positive_threshold}};
      ensure_dir(gen_out);
      write_dataset(fs::path(gen_out) / kDatasetFile, generate_dataset(gen));
      write_text(fs::path(gen_out) / kRunManifestFile,
        run_manifest("generate", params).dump(2) + "\n");
      std::cout << fmt::format("wrote {} scenes to {}", gen.count,
        (fs::path(gen_out) / kDatasetFile).string()) << std::endl;
    } else if (render->parsed()) {
      if (render_jitter < 0.0 || render_jitter >= 1.0) {
        throw Error(ErrorCode::kInvalidArgument, "--jitter must be in [0, 1)");
      }
      const auto labels = read_dataset(render_dataset);
      ensure_dir(render_out);
      std::string manifest_lines;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        const FigureParams params = scene_params(render_seed, i, render_jitter);
        LabeledMask mask;
        try {
          mask = render_mask(labels[i], params);
        } catch (const Error & e) {
          rethrow_for_scene(e, labels[i].scene_id);
        }
        MaskEntry entry{labels[i].scene_id, labels[i].scene_id + ".pgm", mask.width,
          mask.height, params.appearance_seed, mask.keypoints, labels[i]};
        write_pgm(fs::path(render_out) / entry.file, mask.width, mask.height, mask.labels);
        manifest_lines += mask_entry_to_jsonl(entry) + "\n";
      }
      write_text(fs::path(render_out) / kMaskManifestFile, manifest_lines);
      const json params = {{"dataset", render_dataset}, {"out", render_out},
        {"seed", render_seed}, {"jitter", render_jitter}};
      write_text(fs::path(render_out) / kRunManifestFile,
        run_manifest("render", params).dump(2) + "\n");
      std::cout << fmt::format("rendered {} masks to {}", labels.size(), render_out) << std::endl;
    } else if (calibrate_cmd->parsed()) {
      if (cal_masks.empty() == cal_dataset.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "exactly one of --masks or --dataset is required");
      }
      const FeatureSet f = load_features(cal_masks, cal_dataset, cal_seed, cal_jitter);
      ShiftModel model;
      model.calibration = calibrate(f.features, f.truths);
      std::vector<double> scores;
      for (double x : f.features) {
        scores.push_back(model.calibration.predict(x));
      }
      model.threshold = select_threshold(scores, f.labels);
      save_shift_model(model, cal_out);
      const json params = {{"masks", cal_masks}, {"dataset", cal_dataset}, {"seed", cal_seed},
        {"jitter", cal_jitter}, {"out", cal_out}};
      write_text(cal_out + ".manifest.json", run_manifest("calibrate", params).dump(2) + "\n");
      std::cout << json{{"n_train", model.calibration.n_train},
        {"slope", model.calibration.slope}, {"intercept", model.calibration.intercept},
        {"r_train", model.calibration.r_train},
        {"threshold", number_or_null(model.threshold)}}.dump(2) << std::endl;
    } else if (predict->parsed()) {
      if (pred_masks.empty() == pred_dataset.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "exactly one of --masks or --dataset is required");
      }
      const ShiftModel model = load_shift_model(pred_model);
      const FeatureSet f = load_features(pred_masks, pred_dataset, pred_seed, pred_jitter);
      std::string lines;
      for (std::size_t i = 0; i < f.ids.size(); ++i) {
        const double score = model.calibration.predict(f.features[i]);
        lines += json{{"scene_id", f.ids[i]}, {"score", score},
          {"shift_detected", score >= model.threshold}}.dump() + "\n";
      }
      write_text(pred_out, lines);
      const json params = {{"masks", pred_masks}, {"dataset", pred_dataset},
        {"seed", pred_seed}, {"jitter", pred_jitter}, {"model", pred_model}, {"out", pred_out}};
      write_text(pred_out + ".manifest.json", run_manifest("predict", params).dump(2) + "\n");
      std::cout << fmt::format("wrote {} predictions to {}", f.ids.size(), pred_out) << std::endl;
    } else if (evaluate->parsed()) {
      const auto preds = load_prediction_records(ev_predictions);
      json params = {{"mode", ev_mode}, {"predictions", ev_predictions}, {"out", ev_out}};
      json report;
      if (ev_mode == "avatar") {
        if (ev_dataset.empty()) {
          throw Error(ErrorCode::kInvalidArgument, "avatar mode requires --dataset");
        }
        double threshold = SamplerConfig{}.shift_positive_threshold;
        if (!ev_model.empty()) {
          threshold = load_shift_model(ev_model).threshold;
        } else if (ev_threshold) {
          threshold = *ev_threshold;
        }
        params["dataset"] = ev_dataset;
        params["model"] = ev_model;
        params["threshold"] = number_or_null(threshold);
        report = evaluate_avatar(preds, read_dataset(ev_dataset), threshold);
      } else {
        if (ev_ratings.empty()) {
          throw Error(ErrorCode::kInvalidArgument, "clinical mode requires --ratings");
        }
        params["ratings"] = ev_ratings;
        report = evaluate_clinical(preds, read_ratings_csv(ev_ratings));
      }
      emit_report(report, run_manifest("evaluate", params), ev_out);
    } else if (agreement->parsed()) {
      const json params = {{"ratings", ag_ratings}, {"n_bootstrap", ag_iter}, {"seed", ag_seed},
        {"out", ag_out}};
      emit_report(agreement_report(read_ratings_csv(ag_ratings), ag_iter, ag_seed),
        run_manifest("agreement", params), ag_out);
    } else if (timeline->parsed()) {
      const auto frames = read_frames_jsonl(tl_predictions);
      const auto tiles = build_timeline();
      const auto summaries = summarize(frames, tiles, tl_all);
      json asym;
      try {
        const Asymmetry a = asymmetry(summaries);
        asym = {{"rotation_ratio", number_or_null(a.rotation_ratio)},
          {"tilt_ratio", number_or_null(a.tilt_ratio)}};
      } catch (const Error & e) {
        if (e.code() != ErrorCode::kMissingTask) {
          throw;
        }
        asym = {{"error", to_string(e.code())}, {"message", e.what()}};
      }
      if (!tl_csv.empty()) {
        write_text(tl_csv, summaries_csv(summaries));
      }
      const json params = {{"predictions", tl_predictions}, {"include_nonclinical", tl_all},
        {"out", tl_out}, {"csv", tl_csv}};
      emit_report({{"n_frames", frames.size()}, {"summaries", summaries_json(summaries)},
          {"asymmetry", asym}}, run_manifest("timeline", params), tl_out);
    } else if (serve_cmd->parsed()) {
      StudyManifest manifest = StudyManifest::load(sv_manifest);
      manifest.validate();
      const json params = {{"host", sv_host}, {"port", sv_port}, {"manifest", sv_manifest},
        {"store", sv_store}, {"n_bootstrap", sv_iter}};
      write_text(sv_store + ".manifest.json", run_manifest("serve", params).dump(2) + "\n");
      RaterStudy study(std::move(manifest), sv_store);
      return serve(study, sv_host, sv_port, sv_iter);
    }
  } catch (const Error & e) {
    std::cerr << fmt::format("error [{}]: {}", to_string(e.code()), e.what()) << std::endl;
    return exit_code_for(e);
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace cdpose
