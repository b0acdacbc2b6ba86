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

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fogdx/config.hpp"
#include "fogdx/error.hpp"
#include "fogdx/metrics.hpp"
#include "fogdx/node.hpp"
#include "fogdx/protocol.hpp"
#include "fogdx/worker.hpp"

namespace fogdx {

struct BrokerConfig {
  double overload_threshold = 0.9;
  double heartbeat_interval_ms = 1000.0;
  double stale_timeout_ms = 3000.0;
  std::int64_t big_job_bytes = 1 << 20;
  std::string cloud_endpoint;  // empty: no cloud
  double load_check_ms = 0.0;  // simulated cost of one worker load check
  std::size_t broker_capacity = 2;  // jobs the broker's own executor accepts before it counts as busy

  bool cloud_configured() const { return !cloud_endpoint.empty(); }

  static BrokerConfig from(const KeyValueConfig& kv) {
    BrokerConfig c;
    c.overload_threshold = kv.get_double("overload_threshold", c.overload_threshold);
    c.heartbeat_interval_ms = kv.get_double("heartbeat_interval_ms", c.heartbeat_interval_ms);
    c.stale_timeout_ms = kv.get_double("stale_timeout_ms", 3.0 * c.heartbeat_interval_ms);
    c.big_job_bytes = kv.get_int("big_job_bytes", c.big_job_bytes);
    c.cloud_endpoint = kv.get_string("cloud_endpoint", "");
    c.load_check_ms = kv.get_double("load_check_ms", c.load_check_ms);
    c.broker_capacity = static_cast<std::size_t>(kv.get_int("broker_capacity", 2));
    c.validate();
    return c;
  }

  void validate() const {
    if (!(overload_threshold > 0.0 && overload_threshold <= 1.0)) {
      throw invalid_argument("overload_threshold must be in (0, 1]");
    }
    if (!(heartbeat_interval_ms > 0.0)) throw invalid_argument("heartbeat_interval_ms must be > 0");
    if (!(stale_timeout_ms > 0.0)) throw invalid_argument("stale_timeout_ms must be > 0");
    if (big_job_bytes < 0) throw invalid_argument("big_job_bytes must be >= 0");
    if (load_check_ms < 0.0) throw invalid_argument("load_check_ms must be >= 0");
  }
};

/// One registry row as seen at a point in time.
struct NodeView {
  std::string node_id;
  std::string address;
  double cpu_load = 0.0;
  std::int64_t queue_depth = 0;
  std::int64_t last_seen = 0;  // sent_at of the latest heartbeat
  bool live = false;
  bool quarantined = false;

  friend bool operator==(const NodeView&, const NodeView&) = default;
};

inline nlohmann::ordered_json to_json(const NodeView& n) {
  return {{"node_id", n.node_id},         {"address", n.address}, {"cpu_load", n.cpu_load},
          {"queue_depth", n.queue_depth}, {"last_seen", n.last_seen}, {"live", n.live},
          {"quarantined", n.quarantined}};
}

/// Worker registry fed by heartbeats. Last write wins per node (older
/// heartbeats arriving late are ignored); a node is live while the age of its
/// last heartbeat is below the stale timeout.
class NodeRegistry {
 public:
  explicit NodeRegistry(double stale_timeout_ms = 3000.0) : stale_timeout_ms_(stale_timeout_ms) {}

  void register_heartbeat(const Heartbeat& hb) {
    if (!(hb.cpu_load >= 0.0 && hb.cpu_load <= 1.0)) throw ProtocolError("heartbeat cpu_load outside [0, 1]");
    if (hb.node_id.empty()) throw ProtocolError("heartbeat without node_id");
    std::unique_lock lock(mu_);
    auto& e = nodes_[hb.node_id];
    if (e.seen && hb.sent_at < e.hb.sent_at) return;
    e.hb = hb;
    e.seen = true;
  }

  void set_quarantined(const std::string& node_id, bool q) {
    std::unique_lock lock(mu_);
    const auto it = nodes_.find(node_id);
    if (it == nodes_.end()) throw invalid_argument("unknown node " + node_id);
    it->second.quarantined = q;
  }

  /// Consistent copy of all rows, sorted by node id, liveness evaluated at `now`.
  std::vector<NodeView> snapshot(std::int64_t now) const {
    std::shared_lock lock(mu_);
    std::vector<NodeView> out;
    out.reserve(nodes_.size());
    for (const auto& [id, e] : nodes_) {
      const double age = static_cast<double>(now - e.hb.sent_at);
      out.push_back({id, e.hb.address.empty() ? id : e.hb.address, e.hb.cpu_load, e.hb.queue_depth, e.hb.sent_at,
                     age < stale_timeout_ms_, e.quarantined});
    }
    return out;
  }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return nodes_.size();
  }

 private:
  struct Entry {
    Heartbeat hb;
    bool seen = false;
    bool quarantined = false;
  };

  double stale_timeout_ms_;
  mutable std::shared_mutex mu_;
  std::map<std::string, Entry> nodes_;
};

/// Fresh load reading for one worker; nullopt marks the worker unreachable.
using LoadProbe = std::function<std::optional<double>(const NodeView&)>;

struct ArbitrationOutcome {
  ArbitrationDecision decision;
  std::size_t load_checks = 0;  // workers whose load was examined
};

struct ArbitrationContext {
  std::string broker_id = "broker";
  std::string broker_address = "broker";
  std::string cloud_id = "cloud";
  bool broker_available = true;
  bool allow_cloud = true;  // false while falling back from an unreachable cloud
};

/// Placement decision, first match wins:
///   1. latency tolerant or oversized payload, with a cloud configured -> Cloud
///   2. any live, non-quarantined worker below the overload threshold -> the
///      least loaded one (ties by node id)
///   3. broker has capacity -> BrokerOnly
///   4. cloud configured -> Cloud
///   5. BrokerOnly
/// Cloud jobs are addressed to the broker, which relays them.
inline ArbitrationOutcome arbitrate(const JobRequest& req, std::span<const NodeView> snapshot, const BrokerConfig& cfg,
                                    const ArbitrationContext& ctx, const LoadProbe& probe = {}) {
  ArbitrationOutcome out;
  auto& d = out.decision;
  d.job_id = req.job_id;
  d.ensemble = req.ensemble;
  const bool cloud = cfg.cloud_configured() && ctx.allow_cloud;
  auto to_broker = [&](Scenario s) {
    d.scenario = s;
    d.target = ctx.broker_address;
    d.target_id = s == Scenario::Cloud ? ctx.cloud_id : ctx.broker_id;
    return out;
  };

  const bool big = static_cast<std::int64_t>(req.payload.size()) > cfg.big_job_bytes;
  if ((req.latency_tolerant || big) && cloud) return to_broker(Scenario::Cloud);

  const NodeView* best = nullptr;
  double best_load = 0.0;
  for (const auto& n : snapshot) {
    if (!n.live || n.quarantined) continue;
    ++out.load_checks;
    double load = n.cpu_load;
    if (probe) {
      const auto fresh = probe(n);
      if (!fresh) continue;
      load = *fresh;
    }
    if (load >= cfg.overload_threshold) continue;
    if (!best || load < best_load || (load == best_load && n.node_id < best->node_id)) {
      best = &n;
      best_load = load;
    }
  }
  if (best) {
    d.scenario = Scenario::Worker;
    d.target = best->address;
    d.target_id = best->node_id;
    return out;
  }
  if (ctx.broker_available) return to_broker(Scenario::BrokerOnly);
  if (cloud) return to_broker(Scenario::Cloud);
  return to_broker(Scenario::BrokerOnly);
}

/// Modeled arbitration time for the simulator: a fixed overhead plus one
/// load check per examined worker.
inline double modeled_arbitration_ms(double base_ms, double load_check_ms, std::size_t load_checks) {
  return base_ms + load_check_ms * static_cast<double>(load_checks);
}

struct BrokerOptions {
  BrokerConfig config;
  std::string node_id = "broker";
  std::string address = "broker";
  std::string cloud_id = "cloud";
  /// When set, arbitration takes this many ms (simulation); otherwise the
  /// measured wall time of the decision is reported.
  std::function<double(std::size_t load_checks)> arbitration_model;
  LoadProbe probe;
};

/// Resource manager: registry, arbitration, cloud relay. Also runs a worker
/// in-process so it can serve BrokerOnly jobs.
class BrokerNode {
 public:
  BrokerNode(BrokerOptions opts, WorkerOptions self_worker, std::shared_ptr<const WorkerModel> model, NodeEnv& env)
      : opts_(std::move(opts)), env_(env), registry_(opts_.config.stale_timeout_ms) {
    opts_.config.validate();
    self_worker.node_id = opts_.node_id;
    self_worker.address = opts_.address;
    self_worker.node_class = NodeClass::Broker;
    if (!self_worker.peers) {
      self_worker.peers = [this] {
        std::vector<std::string> out;
        for (const auto& n : registry_.snapshot(env_.wall_ms())) {
          if (n.live && !n.quarantined) out.push_back(n.address);
        }
        return out;
      };
    }
    worker_ = std::make_unique<WorkerNode>(std::move(self_worker), std::move(model), env_);
  }

  BrokerNode(const BrokerNode&) = delete;
  BrokerNode& operator=(const BrokerNode&) = delete;

  NodeRegistry& registry() { return registry_; }
  WorkerNode& local_worker() { return *worker_; }
  const BrokerOptions& options() const { return opts_; }

  void handle(const Request& req, const Responder& respond) {
    try {
      if (req.path == endpoint::kJob) {
        on_job(decode<JobRequest>(req.body), respond);
      } else if (req.path == endpoint::kHeartbeat) {
        registry_.register_heartbeat(decode<Heartbeat>(req.body));
        respond({204, ""});
      } else if (req.path == endpoint::kInfer) {
        on_infer(decode<InferRequest>(req.body), respond);
      } else if (req.method == "GET" && req.path == endpoint::kNodes) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& n : registry_.snapshot(env_.wall_ms())) arr.push_back(to_json(n));
        respond({200, arr.dump()});
      } else if (req.method == "GET" && req.path == endpoint::kMetrics) {
        respond({200, metrics_json().dump()});
      } else if (req.path == endpoint::kQuarantine) {
        const auto q = decode<QuarantineRequest>(req.body);
        registry_.set_quarantined(q.node_id, q.quarantined);
        respond({204, ""});
      } else if (!worker_->handle(req, respond)) {
        respond(error_reply(404, "no route for " + req.method + " " + req.path));
      }
    } catch (const Error& e) {
      respond(error_reply(400, e.what()));
    }
  }

  /// Arbitration for one job request; replies with the decision, or with the
  /// JobResponse when the request asks the broker to relay.
  void on_job(const JobRequest& req, Responder respond) {
    const double t0 = env_.now_ms();
    const auto snap = registry_.snapshot(env_.wall_ms());
    ArbitrationContext ctx{opts_.node_id, opts_.address, opts_.cloud_id,
                           worker_->in_flight() < opts_.config.broker_capacity, true};
    auto outcome = arbitrate(req, snap, opts_.config, ctx, opts_.probe);
    const double arb_ms =
        opts_.arbitration_model ? opts_.arbitration_model(outcome.load_checks) : env_.now_ms() - t0;
    outcome.decision.arbitration_ms = arb_ms;
    outcome.decision.decided_at = env_.wall_ms() + static_cast<std::int64_t>(opts_.arbitration_model ? arb_ms : 0.0);
    {
      std::lock_guard lock(mu_);
      ++jobs_arbitrated_;
      ++scenario_counts_[std::string(to_string(outcome.decision.scenario))];
      arbitration_ms_sum_ += arb_ms;
    }
    auto emit = [this, req, decision = outcome.decision, respond] {
      if (!req.relay) {
        respond({200, encode(decision)});
        return;
      }
      dispatch(req, decision, respond);
    };
    if (opts_.arbitration_model && arb_ms > 0.0) {
      env_.schedule(arb_ms, emit);
    } else {
      emit();
    }
  }

  void on_infer(const InferRequest& req, const Responder& respond) {
    if (req.scenario == Scenario::Cloud) {
      forward_to_cloud(req, respond);
    } else {
      worker_->on_infer(req, respond);
    }
  }

  /// Relays a job to the cloud and its answer back. An unreachable cloud
  /// triggers arbitration without the cloud option; the answer is flagged.
  void forward_to_cloud(const InferRequest& req, const Responder& respond) {
    if (!opts_.config.cloud_configured()) {
      fallback(req, respond);
      return;
    }
    env_.send(opts_.config.cloud_endpoint, endpoint::kInfer, encode(req), req.job_id,
              [this, req, respond](std::optional<Reply> reply) {
                if (!reply || reply->status != 200) {
                  fallback(req, respond);
                  return;
                }
                try {
                  auto resp = decode<JobResponse>(reply->body);
                  resp.scenario = Scenario::Cloud;
                  respond({200, encode(resp)});
                } catch (const Error&) {
                  fallback(req, respond);
                }
              });
  }

  nlohmann::ordered_json metrics_json() const {
    nlohmann::ordered_json j;
    {
      std::lock_guard lock(mu_);
      j["node_id"] = opts_.node_id;
      j["jobs_arbitrated"] = jobs_arbitrated_;
      j["mean_arbitration_ms"] =
          jobs_arbitrated_ ? arbitration_ms_sum_ / static_cast<double>(jobs_arbitrated_) : 0.0;
      j["scenarios"] = scenario_counts_;
    }
    j["registered_nodes"] = registry_.size();
    j["local_jobs_completed"] = worker_->completed_jobs();
    j["local_busy_ms"] = worker_->busy_ms();
    if (const auto* ledger = env_.ledger()) {
      const auto frames = ledger->snapshot();
      const auto bw = bandwidth(frames);
      j["bandwidth_bytes"] = bw.total;
      j["frames"] = bw.frames;
      auto nodes = nlohmann::ordered_json::object();
      for (const auto& [id, b] : bw.per_node) nodes[id] = {{"tx", b.tx}, {"rx", b.rx}};
      j["node_bytes"] = nodes;
    }
    return j;
  }

 private:
  void fallback(const InferRequest& req, const Responder& respond) {
    const auto snap = registry_.snapshot(env_.wall_ms());
    JobRequest jr{req.job_id, req.payload, req.ensemble, false, req.submitted_at, false};
    ArbitrationContext ctx{opts_.node_id, opts_.address, opts_.cloud_id, true, false};
    const auto outcome = arbitrate(jr, snap, opts_.config, ctx, opts_.probe);
    auto flagged = [respond](Reply r) {
      if (r.status == 200) {
        auto resp = decode<JobResponse>(r.body);
        resp.fallback = true;
        r.body = encode(resp);
      }
      respond(r);
    };
    InferRequest local = req;
    local.scenario = outcome.decision.scenario;
    if (outcome.decision.scenario == Scenario::Worker) {
      relay_to(outcome.decision.target, local, flagged);
    } else {
      local.scenario = Scenario::BrokerOnly;
      worker_->on_infer(local, flagged);
    }
  }

  void relay_to(const std::string& address, const InferRequest& req, const Responder& respond) {
    env_.send(address, endpoint::kInfer, encode(req), req.job_id, [this, req, respond](std::optional<Reply> reply) {
      if (reply) {
        respond(*reply);
        return;
      }
      // Worker vanished between arbitration and dispatch: serve locally.
      InferRequest local = req;
      local.scenario = Scenario::BrokerOnly;
      worker_->on_infer(local, respond);
    });
  }

  void dispatch(const JobRequest& req, const ArbitrationDecision& d, const Responder& respond) {
    InferRequest infer{req.job_id, req.payload, req.ensemble, d.scenario, req.submitted_at};
    auto with_arbitration = [respond, arb = d.arbitration_ms](Reply r) {
      if (r.status == 200) {
        auto resp = decode<JobResponse>(r.body);
        resp.timings.arbitration_ms = arb;
        r.body = encode(resp);
      }
      respond(r);
    };
    try {
      if (d.scenario == Scenario::Worker) {
        relay_to(d.target, infer, with_arbitration);
      } else {
        on_infer(infer, with_arbitration);
      }
    } catch (const Error& e) {
      respond(error_reply(400, e.what()));
    }
  }

  BrokerOptions opts_;
  NodeEnv& env_;
  NodeRegistry registry_;
  std::unique_ptr<WorkerNode> worker_;

  mutable std::mutex mu_;
  std::size_t jobs_arbitrated_ = 0;
  double arbitration_ms_sum_ = 0.0;
  std::map<std::string, std::size_t> scenario_counts_;
};

}  // namespace fogdx
