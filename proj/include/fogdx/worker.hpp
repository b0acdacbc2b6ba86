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
#include <chrono>
#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fogdx/ensemble.hpp"
#include "fogdx/error.hpp"
#include "fogdx/heartdata.hpp"
#include "fogdx/metrics.hpp"
#include "fogdx/neuralnet.hpp"
#include "fogdx/node.hpp"
#include "fogdx/protocol.hpp"

namespace fogdx {

class QueueFullError : public Error {
 public:
  explicit QueueFullError(std::size_t capacity)
      : Error(ErrorKind::Network, "job queue full (capacity " + std::to_string(capacity) + ")") {}
};

/// Bounded FIFO that stamps each job with its enqueue time.
template <class T>
class JobQueue {
 public:
  explicit JobQueue(std::size_t capacity = 1024) : capacity_(capacity) {}

  void enqueue(T job, double now_ms) {
    if (items_.size() >= capacity_) throw QueueFullError(capacity_);
    items_.push_back({std::move(job), now_ms});
  }

  struct Dequeued {
    T job;
    double queuing_delay_ms = 0.0;
  };

  std::optional<Dequeued> dequeue(double now_ms) {
    if (items_.empty()) return std::nullopt;
    auto [job, at] = std::move(items_.front());
    items_.pop_front();
    return Dequeued{std::move(job), now_ms - at};
  }

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::deque<std::pair<T, double>> items_;
};

/// Busy-time bookkeeping; cpu load is the busy fraction of a trailing window.
class LoadMeter {
 public:
  void begin(double now_ms) { busy_since_ = now_ms; }

  void end(double now_ms) {
    if (!busy_since_) return;
    intervals_.push_back({*busy_since_, now_ms});
    total_busy_ms_ += now_ms - *busy_since_;
    busy_since_.reset();
  }

  double load(double now_ms, double window_ms) {
    if (window_ms <= 0.0) return busy_since_ ? 1.0 : 0.0;
    const double lo = now_ms - window_ms;
    while (!intervals_.empty() && intervals_.front().second <= lo) intervals_.pop_front();
    double busy = 0.0;
    for (const auto& [a, b] : intervals_) busy += std::max(0.0, std::min(b, now_ms) - std::max(a, lo));
    if (busy_since_) busy += std::max(0.0, now_ms - std::max(*busy_since_, lo));
    return std::clamp(busy / window_ms, 0.0, 1.0);
  }

  double total_busy_ms(double now_ms) const {
    return total_busy_ms_ + (busy_since_ ? now_ms - *busy_since_ : 0.0);
  }

 private:
  std::deque<std::pair<double, double>> intervals_;
  std::optional<double> busy_since_;
  double total_busy_ms_ = 0.0;
};

/// The model a node serves plus the normalization it was trained with.
struct WorkerModel {
  MlpModel model;
  NormStats norm;

  PredictionResult predict(const FeatureVector& raw) const {
    return make_result(predict_proba(model, normalize(raw, norm)));
  }
};

struct LocalOutcome {
  PredictionResult result;
  double execution_ms = 0.0;
};

/// Preprocess, forward pass and confidence for one payload, timed on the
/// wall clock. Throws ProtocolError for malformed payloads.
inline LocalOutcome execute_local(const WorkerModel& m, const std::string& payload) {
  const auto x = parse_payload(payload);
  const auto t0 = std::chrono::steady_clock::now();
  auto r = m.predict(x);
  const auto t1 = std::chrono::steady_clock::now();
  return {std::move(r), std::chrono::duration<double, std::milli>(t1 - t0).count()};
}

/// Collects member predictions for ensemble jobs, keyed by job id. The origin
/// votes first; peer replies follow in arrival order. Once a job is closed,
/// further replies for it are discarded.
class EnsembleCollector {
 public:
  struct Closed {
    std::vector<Probabilities> members;
    std::size_t expected_peers = 0;
    std::size_t received_peers = 0;
    double local_queuing_ms = 0.0;
    double local_execution_ms = 0.0;
    Responder respond;
    Scenario scenario = Scenario::Worker;
  };

  void open(const std::string& job_id, std::size_t expected_peers, Responder respond, Scenario scenario) {
    std::lock_guard lock(mu_);
    Pending p;
    p.expected_peers = expected_peers;
    p.respond = std::move(respond);
    p.scenario = scenario;
    pending_[job_id] = std::move(p);
  }

  void add_local(const std::string& job_id, const Probabilities& p, double queuing_ms, double execution_ms) {
    std::lock_guard lock(mu_);
    const auto it = pending_.find(job_id);
    if (it == pending_.end()) return;
    it->second.local = p;
    it->second.queuing_ms = queuing_ms;
    it->second.execution_ms = execution_ms;
  }

  /// False when the job is unknown, already closed, or the node already replied.
  bool add_reply(const EnsembleReply& r) {
    std::lock_guard lock(mu_);
    const auto it = pending_.find(r.job_id);
    if (it == pending_.end()) return false;
    auto& p = it->second;
    if (!p.repliers.insert(r.node_id).second) return false;
    if (p.replies.size() >= p.expected_peers) return false;
    p.replies.push_back({r.p0, r.p1});
    return true;
  }

  void mark_timed_out(const std::string& job_id) {
    std::lock_guard lock(mu_);
    if (const auto it = pending_.find(job_id); it != pending_.end()) it->second.timed_out = true;
  }

  /// Closes the job if it is ready: the local vote is in and either every peer
  /// replied or the timeout passed.
  std::optional<Closed> close_if_ready(const std::string& job_id) {
    std::lock_guard lock(mu_);
    const auto it = pending_.find(job_id);
    if (it == pending_.end()) return std::nullopt;
    auto& p = it->second;
    if (!p.local) return std::nullopt;
    if (p.replies.size() < p.expected_peers && !p.timed_out) return std::nullopt;
    Closed c;
    c.members.push_back(*p.local);
    c.members.insert(c.members.end(), p.replies.begin(), p.replies.end());
    c.expected_peers = p.expected_peers;
    c.received_peers = p.replies.size();
    c.local_queuing_ms = p.queuing_ms;
    c.local_execution_ms = p.execution_ms;
    c.respond = std::move(p.respond);
    c.scenario = p.scenario;
    pending_.erase(it);
    return c;
  }

  void abandon(const std::string& job_id) {
    std::lock_guard lock(mu_);
    pending_.erase(job_id);
  }

  std::size_t open_jobs() const {
    std::lock_guard lock(mu_);
    return pending_.size();
  }

 private:
  struct Pending {
    std::size_t expected_peers = 0;
    std::optional<Probabilities> local;
    std::vector<Probabilities> replies;
    std::set<std::string> repliers;
    double queuing_ms = 0.0;
    double execution_ms = 0.0;
    bool timed_out = false;
    Responder respond;
    Scenario scenario = Scenario::Worker;
  };

  mutable std::mutex mu_;
  std::map<std::string, Pending> pending_;
};

struct WorkerOptions {
  std::string node_id = "worker";
  std::string address = "worker";
  NodeClass node_class = NodeClass::Worker;
  double ensemble_timeout_ms = 2000.0;
  std::size_t queue_capacity = 1024;
  double vote_overhead_ms = 0.0;  // extra modeled time for the majority step
  double load_window_ms = 1000.0;
  std::function<std::vector<std::string>()> peers;  // peer addresses for ensemble fanout
};

/// A node that executes inference jobs: one serial executor fed by a FIFO,
/// plus ensemble coordination when it is the origin of a job.
class WorkerNode {
 public:
  WorkerNode(WorkerOptions opts, std::shared_ptr<const WorkerModel> model, NodeEnv& env)
      : opts_(std::move(opts)), model_(std::move(model)), env_(env), queue_(opts_.queue_capacity) {
    if (!model_) throw invalid_argument("WorkerNode: model required");
  }

  WorkerNode(const WorkerNode&) = delete;
  WorkerNode& operator=(const WorkerNode&) = delete;

  const WorkerOptions& options() const { return opts_; }

  /// Dispatches the worker endpoints. Returns false for unknown paths.
  bool handle(const Request& req, const Responder& respond) {
    try {
      if (req.method == "GET" && req.path == endpoint::kNodes) {
        respond({200, nlohmann::json::array({to_json(status())}).dump()});
      } else if (req.path == endpoint::kInfer) {
        on_infer(decode<InferRequest>(req.body), respond);
      } else if (req.path == endpoint::kEnsemble) {
        on_fanout(decode<EnsembleFanout>(req.body), respond);
      } else if (req.path == endpoint::kEnsembleReply) {
        on_reply(decode<EnsembleReply>(req.body));
        respond({204, ""});
      } else {
        return false;
      }
    } catch (const QueueFullError& e) {
      respond(error_reply(503, e.what()));
    } catch (const Error& e) {
      respond(error_reply(400, e.what()));
    }
    return true;
  }

  void on_infer(const InferRequest& req, Responder respond) {
    const auto x = parse_payload(req.payload);
    if (!req.ensemble) {
      submit(req.job_id, x, [this, req, respond](const PredictionResult& r, double queue_ms, double exec_ms) {
        auto resp = make_response(req.job_id, r, opts_.node_id, req.scenario);
        resp.timings.queuing_ms = queue_ms;
        resp.timings.execution_ms = exec_ms;
        respond({200, encode(resp)});
      });
      return;
    }
    const auto peers = opts_.peers ? opts_.peers() : std::vector<std::string>{};
    const auto frames = multicast_frame(req.job_id, req.payload, opts_.node_id, opts_.address, peers);
    collector_.open(req.job_id, frames.size(), std::move(respond), req.scenario);
    const auto job_id = req.job_id;
    try {
      submit(job_id, x, [this, job_id](const PredictionResult& r, double queue_ms, double exec_ms) {
        collector_.add_local(job_id, {r.p0, r.p1}, queue_ms, exec_ms);
        finish_if_ready(job_id);
      });
    } catch (...) {
      collector_.abandon(job_id);
      throw;
    }
    for (const auto& f : frames) env_.send(f.destination, endpoint::kEnsemble, encode(f), job_id, {});
    env_.schedule(opts_.ensemble_timeout_ms, [this, job_id] {
      collector_.mark_timed_out(job_id);
      finish_if_ready(job_id);
    });
  }

  void on_fanout(const EnsembleFanout& f, const Responder& respond) {
    const auto x = parse_payload(f.payload);
    respond({202, ""});
    submit(f.job_id, x, [this, f](const PredictionResult& r, double, double) {
      env_.send(f.reply_to, endpoint::kEnsembleReply, encode(EnsembleReply{f.job_id, opts_.node_id, r.p0, r.p1}),
                f.job_id, {});
    });
  }

  void on_reply(const EnsembleReply& r) {
    if (collector_.add_reply(r)) finish_if_ready(r.job_id);
  }

  Heartbeat status() {
    std::lock_guard lock(mu_);
    const double now = env_.now_ms();
    return {opts_.node_id, meter_.load(now, opts_.load_window_ms),
            static_cast<std::int64_t>(queue_.size() + (busy_ ? 1 : 0)), env_.wall_ms(), opts_.address};
  }

  /// Jobs queued or running.
  std::size_t in_flight() const {
    std::lock_guard lock(mu_);
    return queue_.size() + (busy_ ? 1 : 0);
  }

  double busy_ms() const {
    std::lock_guard lock(mu_);
    return meter_.total_busy_ms(env_.now_ms());
  }

  std::size_t completed_jobs() const {
    std::lock_guard lock(mu_);
    return completed_;
  }

 private:
  using Done = std::function<void(const PredictionResult&, double queue_ms, double exec_ms)>;

  struct Task {
    std::string job_id;
    FeatureVector x{};
    Done done;
  };

  void submit(const std::string& job_id, const FeatureVector& x, Done done) {
    std::optional<JobQueue<Task>::Dequeued> next;
    {
      std::lock_guard lock(mu_);
      queue_.enqueue({job_id, x, std::move(done)}, env_.now_ms());
      if (!busy_) next = take_next_locked();
    }
    if (next) run(std::move(*next));
  }

  std::optional<JobQueue<Task>::Dequeued> take_next_locked() {
    const double now = env_.now_ms();
    auto next = queue_.dequeue(now);
    if (next) {
      busy_ = true;
      meter_.begin(now);
    }
    return next;
  }

  void run(JobQueue<Task>::Dequeued item) {
    auto model = model_;
    const auto x = item.job.x;
    auto task = std::make_shared<JobQueue<Task>::Dequeued>(std::move(item));
    env_.compute([model, x] { return model->predict(x); },
                 [this, task](PredictionResult r, double exec_ms) {
                   std::optional<JobQueue<Task>::Dequeued> next;
                   {
                     std::lock_guard lock(mu_);
                     busy_ = false;
                     meter_.end(env_.now_ms());
                     ++completed_;
                     next = take_next_locked();
                   }
                   task->job.done(r, task->queuing_delay_ms, exec_ms);
                   if (next) run(std::move(*next));
                 });
  }

  void finish_if_ready(const std::string& job_id) {
    auto closed = collector_.close_if_ready(job_id);
    if (!closed) return;
    const auto result = vote(closed->members);
    auto resp = make_response(job_id, result, opts_.node_id, closed->scenario);
    resp.partial = closed->received_peers < closed->expected_peers;
    resp.timings.queuing_ms = closed->local_queuing_ms;
    resp.timings.execution_ms = closed->local_execution_ms + opts_.vote_overhead_ms;
    auto respond = std::move(closed->respond);
    Reply reply{200, encode(resp)};
    if (opts_.vote_overhead_ms > 0.0) {
      env_.schedule(opts_.vote_overhead_ms, [respond, reply] { respond(reply); });
    } else {
      respond(reply);
    }
  }

  WorkerOptions opts_;
  std::shared_ptr<const WorkerModel> model_;
  NodeEnv& env_;
  EnsembleCollector collector_;

  mutable std::mutex mu_;
  JobQueue<Task> queue_;
  mutable LoadMeter meter_;
  bool busy_ = false;
  std::size_t completed_ = 0;
};

}  // namespace fogdx
