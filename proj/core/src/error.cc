// Copyright (c) 2026 The ProsodyKit Authors
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

#include "prosodykit/error.h"

namespace prosodykit {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingFile: return "missing_file";
    case ErrorCode::kUnsupportedEncoding: return "unsupported_encoding";
    case ErrorCode::kEmptyAudio: return "empty_audio";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kLengthMismatch: return "length_mismatch";
    case ErrorCode::kSignalTooShort: return "signal_too_short";
    case ErrorCode::kOutOfVocabulary: return "out_of_vocabulary";
    case ErrorCode::kMalformedInput: return "malformed_input";
    case ErrorCode::kDuplicateId: return "duplicate_id";
    case ErrorCode::kDegenerateStats: return "degenerate_stats";
    case ErrorCode::kIoFailure: return "io_failure";
    case ErrorCode::kNumericalFailure: return "numerical_failure";
    case ErrorCode::kPrecondition: return "precondition";
  }
  return "unknown";
}

}  // namespace prosodykit
