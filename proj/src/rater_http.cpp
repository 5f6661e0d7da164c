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

#include "cdpose/rater_http.hpp"

#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "cdpose/report.hpp"

namespace cdpose
{

namespace
{

int http_status(ErrorCode code)
{
  switch (code) {
    case ErrorCode::kUnknownRater: return 404;
    case ErrorCode::kDuplicateRater: return 409;
    case ErrorCode::kWrongImage: return 409;
    case ErrorCode::kOutOfRangeScore: return 422;
    case ErrorCode::kParseError:
    case ErrorCode::kInvalidArgument: return 400;
    default: return 500;
  }
}

void reply_json(httplib::Response & res, int status, const nlohmann::json & body)
{
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response & res, const Error & e)
{
  nlohmann::json body = {{"error", to_string(e.code())}, {"message", e.what()}};
  if (const auto * range = dynamic_cast<const ScoreRangeError *>(&e)) {
    body["item"] = std::string(to_string(range->item()));
    body["bound"] = range->bound();
  }
  reply_json(res, http_status(e.code()), body);
}

nlohmann::json parse_body(const httplib::Request & req)
{
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::exception & e) {
    throw Error(ErrorCode::kParseError, std::string("request body: ") + e.what());
  }
}

bool authorized(const RaterStudy & study, const httplib::Request & req, const std::string & id)
{
  static const std::string kPrefix = "Bearer ";
  const std::string auth = req.get_header_value("Authorization");
  return auth.rfind(kPrefix, 0) == 0 && study.check_token(id, auth.substr(kPrefix.size()));
}

// Wraps a handler so library errors become JSON error replies.
template<typename F>
httplib::Server::Handler guarded(F f)
{
  return [f](const httplib::Request & req, httplib::Response & res) {
           try {
             f(req, res);
           } catch (const Error & e) {
             reply_error(res, e);
           } catch (const nlohmann::json::exception & e) {
             reply_error(res, Error(ErrorCode::kParseError, e.what()));
           }
         };
}

}  // namespace

RaterServer::RaterServer(RaterStudy & study, std::size_t snapshot_iterations)
: study_(study), snapshot_iterations_(snapshot_iterations),
  server_(std::make_unique<httplib::Server>())
{
  auto & s = *server_;
  s.set_default_headers({
      {"Access-Control-Allow-Origin", "*"},
      {"Access-Control-Allow-Headers", "Authorization, Content-Type"},
      {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
    });
  s.Options(R"(.*)", [](const httplib::Request &, httplib::Response & res) {res.status = 204;});

  s.Get("/healthz", [](const httplib::Request &, httplib::Response & res) {
      reply_json(res, 200, {{"version", kVersion}, {"status", "ok"}});
    });

  s.Post("/raters", guarded([this](const httplib::Request & req, httplib::Response & res) {
      const auto body = parse_body(req);
      const Assignment a = study_.register_rater(body.at("rater_id").get<std::string>());
      const auto & m = study_.manifest();
      reply_json(res, 201, {
          {"rater_id", a.rater_id},
          {"token", a.token},
          {"n_images", a.image_ids.size()},
          {"per_kind", {{"avatar", m.quota_avatar}, {"real", m.quota_real}}},
        });
    }));

  s.Get("/raters/:id/next", guarded([this](const httplib::Request & req, httplib::Response & res) {
      const std::string id = req.path_params.at("id");
      if (!authorized(study_, req, id)) {
        if (!study_.assignment(id)) {
          throw Error(ErrorCode::kUnknownRater, "unknown rater " + id);
        }
        reply_json(res, 401, {{"error", "Unauthorized"}, {"message", "missing or bad token"}});
        return;
      }
      const auto a = study_.assignment(id);
      const auto task = study_.next_image(id);
      nlohmann::json progress = {{"done", a->cursor}, {"total", a->image_ids.size()}};
      if (!task) {
        reply_json(res, 200, {{"done", true}, {"progress", progress}});
        return;
      }
      nlohmann::json items = nlohmann::json::array();
      for (TwstrsItem item : kAllItems) {
        items.push_back({{"item", std::string(to_string(item))}, {"max", max_score(item)}});
      }
      reply_json(res, 200, {
          {"done", false},
          {"image_id", task->image.image_id},
          {"image_kind", std::string(to_string(task->image.kind))},
          {"front_uri", task->image.front_uri},
          {"side_uri", task->image.side_uri},
          {"items", items},
          {"progress", progress},
        });
    }));

  s.Post("/raters/:id/ratings", guarded([this](const httplib::Request & req, httplib::Response & res) {
      const std::string id = req.path_params.at("id");
      if (!authorized(study_, req, id)) {
        if (!study_.assignment(id)) {
          throw Error(ErrorCode::kUnknownRater, "unknown rater " + id);
        }
        reply_json(res, 401, {{"error", "Unauthorized"}, {"message", "missing or bad token"}});
        return;
      }
      const auto body = parse_body(req);
      SubmittedScores scores;
      const auto & js = body.at("scores");
      for (TwstrsItem item : kAllItems) {
        const std::string name(to_string(item));
        if (!js.contains(name) || !js[name].is_number_integer()) {
          throw Error(ErrorCode::kParseError, "scores." + name + " missing or not an integer");
        }
        scores[item] = js[name].get<int>();
      }
      if (body.contains("direction")) {
        scores.direction = parse_direction(body["direction"].get<std::string>());
      }
      const std::size_t cursor =
        study_.submit_rating(id, body.at("image_id").get<std::string>(), scores);
      reply_json(res, 200, {{"ok", true}, {"cursor", cursor},
          {"total", study_.assignment(id)->image_ids.size()}});
    }));

  s.Get("/agreement", guarded([this](const httplib::Request &, httplib::Response & res) {
      reply_json(res, 200, snapshot_json(study_.agreement_snapshot(snapshot_iterations_)));
    }));

  s.Get("/export.csv", [this](const httplib::Request &, httplib::Response & res) {
      std::ostringstream out;
      const auto recs = study_.records();
      write_ratings_csv(out, recs);
      res.set_content(out.str(), "text/csv");
    });
}

RaterServer::~RaterServer()
{
  stop();
}

int RaterServer::bind(const std::string & host, int port)
{
  int bound = port;
  bool ok = false;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
    ok = bound > 0;
  } else {
    ok = server_->bind_to_port(host, port);
  }
  if (!ok) {
    throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
  }
  return bound;
}

void RaterServer::serve()
{
  server_->listen_after_bind();
}

void RaterServer::stop()
{
  if (server_ && server_->is_running()) {
    server_->stop();
  }
}

void RaterServer::wait_until_ready() const
{
  server_->wait_until_ready();
}

}  // namespace cdpose
