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

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fogdx/harness.hpp"

namespace fogdx::test {

/// Model whose output favors class 1 by `bias` logits (0 gives 50/50).
inline std::shared_ptr<const WorkerModel> biased_model(double bias) {
  MlpModel m(kArchitecture);
  m.layers().back().bias[1] = bias;
  return std::make_shared<WorkerModel>(WorkerModel{std::move(m), fit_norm(sample_patients())});
}

inline std::string row1_payload() { return make_payload(sample_patients()[0].features); }

/// A few nodes on the simulated transport, plus a "client" endpoint for
/// sending requests and collecting replies.
struct SimRig {
  SimConfig cfg;
  EventLoop loop;
  std::unique_ptr<SimNetwork> net;
  std::vector<std::unique_ptr<SimNodeEnv>> envs;
  std::vector<std::unique_ptr<WorkerNode>> workers;
  std::unique_ptr<SimNodeEnv> client;

  explicit SimRig(double lan_delay = 1.0) {
    cfg.lan_delay_ms = lan_delay;
    cfg.lan_jitter_ms = 0.0;
    net = std::make_unique<SimNetwork>(loop, cfg);
    client = std::make_unique<SimNodeEnv>(*net, "client", 0.0);
  }

  SimNodeEnv& env(const std::string& id, double exec_ms) {
    envs.push_back(std::make_unique<SimNodeEnv>(*net, id, exec_ms));
    return *envs.back();
  }

  WorkerNode& add_worker(const std::string& id, std::shared_ptr<const WorkerModel> model, double exec_ms,
                         std::vector<std::string> peers = {}, double timeout_ms = 2000.0) {
    WorkerOptions o;
    o.node_id = o.address = id;
    o.ensemble_timeout_ms = timeout_ms;
    o.peers = [peers] { return peers; };
    workers.push_back(std::make_unique<WorkerNode>(o, std::move(model), env(id, exec_ms)));
    auto* w = workers.back().get();
    net->attach(id, [w](const Request& r, const Responder& respond) {
      if (!w->handle(r, respond)) respond(error_reply(404, "no route"));
    });
    return *w;
  }

  /// Sends from the client at virtual time `at`; the reply lands in `out`.
  void send_at(double at, const std::string& to, const std::string& path, std::string body,
               std::optional<Reply>& out, double* received_at = nullptr) {
    loop.schedule_at(at, [this, to, path, body = std::move(body), &out, received_at]() mutable {
      client->send(to, path, std::move(body), "", [this, &out, received_at](std::optional<Reply> r) {
        out = std::move(r);
        if (received_at) *received_at = loop.now();
      });
    });
  }
};

}  // namespace fogdx::test
