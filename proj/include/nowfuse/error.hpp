// Copyright 2026 The nowfuse Authors
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

#ifndef NOWFUSE_ERROR_HPP_
#define NOWFUSE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace nowfuse {

enum class ErrorCode {
  kInvalidArgument = 1,
  kDimensionMismatch = 2,
  kFormat = 3,
  kIo = 4,
  kNonFinite = 5,
  kDiverged = 6,
};

// All library failures are reported through this exception type. The code
// maps one-to-one onto the status values of the C API.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

// Literal messages are only turned into strings on failure; this overload is
// the one hit inside per-pixel validation loops.
inline void require(bool cond, ErrorCode code, const char* what) {
  if (!cond) fail(code, what);
}

}  // namespace nowfuse

#endif  // NOWFUSE_ERROR_HPP_
