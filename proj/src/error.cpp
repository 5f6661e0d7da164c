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

#include "cdpose/error.hpp"

namespace cdpose
{

const char * to_string(ErrorCode code)
{
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kOutOfFrame: return "OutOfFrame";
    case ErrorCode::kMissingKeypoint: return "MissingKeypoint";
    case ErrorCode::kEmptyMask: return "EmptyMask";
    case ErrorCode::kDegenerateFit: return "DegenerateFit";
    case ErrorCode::kSingleClass: return "SingleClass";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kNoRatings: return "NoRatings";
    case ErrorCode::kZeroVariance: return "ZeroVariance";
    case ErrorCode::kNoPositives: return "NoPositives";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kOutOfProtocol: return "OutOfProtocol";
    case ErrorCode::kMissingTask: return "MissingTask";
    case ErrorCode::kDuplicateRater: return "DuplicateRater";
    case ErrorCode::kUnknownRater: return "UnknownRater";
    case ErrorCode::kOutOfRangeScore: return "OutOfRangeScore";
    case ErrorCode::kWrongImage: return "WrongImage";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

bool is_data_error(ErrorCode code)
{
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kIo:
      return false;
    default:
      return true;
  }
}

}  // namespace cdpose
