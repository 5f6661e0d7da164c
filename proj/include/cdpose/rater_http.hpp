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

#ifndef CDPOSE_RATER_HTTP_HPP_
#define CDPOSE_RATER_HTTP_HPP_

#include <cstddef>
#include <memory>
#include <string>

#include "cdpose/rater_service.hpp"

namespace httplib
{
class Server;
}

namespace cdpose
{

/// HTTP JSON front end of a RaterStudy.
///
///   POST /raters                 {rater_id}                -> assignment summary + token
///   GET  /raters/{id}/next       (Bearer token)            -> image task or {done:true}
///   POST /raters/{id}/ratings    {image_id, scores, direction?} (Bearer token) -> ack
///   GET  /agreement                                        -> snapshot
///   GET  /export.csv                                       -> ratings CSV
///   GET  /healthz                                          -> {version}
class RaterServer
{
public:
  explicit RaterServer(RaterStudy & study,
    std::size_t snapshot_iterations = kDefaultBootstrapIterations);
  ~RaterServer();

  RaterServer(const RaterServer &) = delete;
  RaterServer & operator=(const RaterServer &) = delete;

  /// Binds the listening socket; port 0 picks a free one. Returns the bound
  /// port. Throws Io when binding fails (e.g. port in use).
  int bind(const std::string & host, int port);

  /// Serves until stop(). Requires a prior bind().
  void serve();
  void stop();
  void wait_until_ready() const;

private:
  RaterStudy & study_;
  std::size_t snapshot_iterations_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace cdpose

#endif  // CDPOSE_RATER_HTTP_HPP_
