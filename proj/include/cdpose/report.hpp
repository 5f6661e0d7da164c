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

#ifndef CDPOSE_REPORT_HPP_
#define CDPOSE_REPORT_HPP_

#include <optional>
#include <span>

#include <nlohmann/json.hpp>

#include "cdpose/protocol.hpp"
#include "cdpose/rater_service.hpp"
#include "cdpose/stats.hpp"

namespace cdpose
{

/// {item, alpha, ci:[lo,hi], metric, n_iter, seed}
nlohmann::json agreement_json(TwstrsItem item, const AgreementResult & r);

nlohmann::json snapshot_json(const AgreementSnapshot & snap);

nlohmann::json summary_json(const TaskSummary & s);
nlohmann::json summaries_json(std::span<const TaskSummary> summaries);

/// Metrics as JSON; an undefined TPR is written as null.
nlohmann::json metrics_json(const ClassificationMetrics & m);

/// Finite numbers as-is, optional/non-finite values as null.
nlohmann::json number_or_null(std::optional<double> v);

}  // namespace cdpose

#endif  // CDPOSE_REPORT_HPP_
