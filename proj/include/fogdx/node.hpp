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

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "fogdx/ensemble.hpp"
#include "fogdx/metrics.hpp"

// Broker and worker logic is written against NodeEnv only. The discrete-event
// simulator and the HTTP servers each provide an implementation, so both run
// the same message handlers.

namespace fogdx {

struct Request {
  std::string method = "POST";
  std::string path;
  std::string body;
};

struct Reply {
  int status = 200;
  std::string body;  // empty for acknowledgements without content
};

inline Reply error_reply(int status, const std::string& message) {
  return {status, nlohmann::json{{"error", message}}.dump()};
}

/// Completes an incoming request. Must be called exactly once.
using Responder = std::function<void(Reply)>;
/// Receives the peer's reply, or nullopt if the peer could not be reached.
using ReplyHandler = std::function<void(std::optional<Reply>)>;

class NodeEnv {
 public:
  virtual ~NodeEnv() = default;

  /// Monotonic milliseconds, used for spans.
  virtual double now_ms() const = 0;
  /// Milliseconds since the Unix epoch (virtual in simulation).
  virtual std::int64_t wall_ms() const = 0;

  /// Sends `body` to `path` on the node at `address`. `on_reply` may be empty
  /// for fire-and-forget messages.
  virtual void send(const std::string& address, const std::string& path, std::string body, const std::string& job_id,
                    ReplyHandler on_reply) = 0;

  virtual void schedule(double delay_ms, std::function<void()> fn) = 0;

  /// Runs one inference on the node's compute resource and reports the result
  /// with the compute time in ms. Calls are serialized by the caller.
  virtual void compute(std::function<PredictionResult()> fn,
                       std::function<void(PredictionResult, double exec_ms)> done) = 0;

  /// Frame log for bandwidth reporting, if this environment keeps one.
  virtual const FrameLedger* ledger() const { return nullptr; }
};

}  // namespace fogdx
