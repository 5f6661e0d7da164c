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

#ifndef CDPOSE_ERROR_HPP_
#define CDPOSE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace cdpose
{

enum class ErrorCode
{
  kInvalidArgument,
  kDegenerateInput,
  kOutOfRange,
  kOutOfFrame,
  kMissingKeypoint,
  kEmptyMask,
  kDegenerateFit,
  kSingleClass,
  kParseError,
  kDuplicateId,
  kNoRatings,
  kZeroVariance,
  kNoPositives,
  kInsufficientData,
  kOutOfProtocol,
  kMissingTask,
  kDuplicateRater,
  kUnknownRater,
  kOutOfRangeScore,
  kWrongImage,
  kIo,
};

const char * to_string(ErrorCode code);

/// All library failures are reported as this exception; `code()` identifies
/// the contract that was violated.
class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string & message)
  : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept {return code_;}

private:
  ErrorCode code_;
};

/// True for errors caused by bad input data rather than the environment.
bool is_data_error(ErrorCode code);

}  // namespace cdpose

#endif  // CDPOSE_ERROR_HPP_
