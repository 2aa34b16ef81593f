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

#ifndef PROSODYKIT_ERROR_H_
#define PROSODYKIT_ERROR_H_

#include <stdexcept>
#include <string>

namespace prosodykit {

enum class ErrorCode {
  kMissingFile,
  kUnsupportedEncoding,
  kEmptyAudio,
  kInvalidArgument,
  kLengthMismatch,
  kSignalTooShort,
  kOutOfVocabulary,
  kMalformedInput,
  kDuplicateId,
  kDegenerateStats,
  kIoFailure,
  kNumericalFailure,
  kPrecondition,
};

const char* ErrorCodeName(ErrorCode code);

// All library failures are reported with this exception type; callers branch
// on code() rather than on the message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace prosodykit

#endif  // PROSODYKIT_ERROR_H_
