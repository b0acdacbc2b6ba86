// Copyright 2026 The fogdx Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace fogdx {

/// Broad failure classes. The CLI maps these onto process exit codes.
enum class ErrorKind {
  Validation,  // bad user input, malformed files, bad messages
  Network,     // peer unreachable, timeouts
  Internal,    // invariant broken, numerical failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// CSV / model file / config parse failures.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(ErrorKind::Validation, what) {}
};

/// Wire message failures (missing fields, bad payloads, out-of-range values).
class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what) : Error(ErrorKind::Validation, what) {}
};

class NetworkError : public Error {
 public:
  explicit NetworkError(const std::string& what) : Error(ErrorKind::Network, what) {}
};

inline Error invalid_argument(const std::string& what) { return Error(ErrorKind::Validation, what); }

inline Error internal_error(const std::string& what) { return Error(ErrorKind::Internal, what); }

}  // namespace fogdx
