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

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fogdx/broker.hpp"
#include "fogdx/config.hpp"
#include "fogdx/ensemble.hpp"
#include "fogdx/metrics.hpp"
#include "fogdx/node.hpp"
#include "fogdx/protocol.hpp"
#include "fogdx/worker.hpp"

// HTTP transport: NodeEnv over real sockets, node servers and the gateway
// client. Addresses are "host:port".

namespace fogdx::net {

struct HostPort {
  std::string host;
  int port = 0;
};

inline HostPort parse_address(std::string_view address) {
  std::string a(address);
  if (a.rfind("http://", 0) == 0) a = a.substr(7);
  while (!a.empty() && a.back() == '/') a.pop_back();
  const auto colon = a.rfind(':');
  if (colon == std::string::npos || colon == 0) throw invalid_argument("address must be host:port, got '" + a + "'");
  const auto port = detail::parse_number(a.substr(colon + 1));
  if (!port || *port < 0 || *port > 65535 || *port != std::floor(*port)) {
    throw invalid_argument("bad port in address '" + a + "'");
  }
  return {a.substr(0, colon), static_cast<int>(*port)};
}

inline std::string format_address(const std::string& host, int port) { return host + ":" + std::to_string(port); }

struct Timeouts {
  int connect_ms = 2000;
  int read_ms = 10000;
};

/// One blocking HTTP exchange. nullopt when the peer cannot be reached.
inline std::optional<Reply> http_call(const std::string& address, const std::string& method, const std::string& path,
                                      const std::string& body, const Timeouts& t = {}) {
  const auto hp = parse_address(address);
  httplib::Client cli(hp.host, hp.port);
  cli.set_connection_timeout(std::chrono::milliseconds(t.connect_ms));
  cli.set_read_timeout(std::chrono::milliseconds(t.read_ms));
  cli.set_write_timeout(std::chrono::milliseconds(t.read_ms));
  auto res = method == "GET" ? cli.Get(path) : cli.Post(path, body, "application/json");
  if (!res) return std::nullopt;
  return Reply{res->status, res->body};
}

inline std::string method_for(const std::string& path) {
  return path == endpoint::kNodes || path == endpoint::kMetrics ? "GET" : "POST";
}

/// Delayed callbacks on one background thread. Pending callbacks are dropped
/// on stop.
class Timer {
 public:
  Timer() : thread_([this] { loop(); }) {}
  ~Timer() { stop(); }

  Timer(const Timer&) = delete;
  Timer& operator=(const Timer&) = delete;

  void after(double delay_ms, std::function<void()> fn) {
    const auto at = Clock::now() + std::chrono::microseconds(static_cast<std::int64_t>(delay_ms * 1000.0));
    {
      std::lock_guard lock(mu_);
      if (stopped_) return;
      events_.push({at, seq_++, std::move(fn)});
    }
    cv_.notify_all();
  }

  void stop() {
    {
      std::lock_guard lock(mu_);
      if (stopped_) return;
      stopped_ = true;
    }
    cv_.notify_all();
    if (thread_.joinable()) thread_.join();
  }

 private:
  using Clock = std::chrono::steady_clock;
  struct Event {
    Clock::time_point at;
    std::uint64_t seq;
    std::function<void()> fn;
    bool operator>(const Event& o) const { return at != o.at ? at > o.at : seq > o.seq; }
  };

  void loop() {
    std::unique_lock lock(mu_);
    while (!stopped_) {
      if (events_.empty()) {
        cv_.wait(lock);
        continue;
      }
      const auto at = events_.top().at;
      if (Clock::now() < at) {
        cv_.wait_until(lock, at);
        continue;
      }
      auto fn = events_.top().fn;
      events_.pop();
      lock.unlock();
      fn();
      lock.lock();
    }
  }

  std::mutex mu_;
  std::condition_variable cv_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t seq_ = 0;
  bool stopped_ = false;
  std::thread thread_;
};

/// NodeEnv over HTTP. Outgoing requests run on an I/O pool, inference on a
/// single compute thread.
class HttpEnv final : public NodeEnv {
 public:
  explicit HttpEnv(std::string node_id, Timeouts timeouts = {}, std::size_t io_threads = 8)
      : node_id_(std::move(node_id)), timeouts_(timeouts), io_(io_threads), compute_(1) {}

  ~HttpEnv() override { shutdown(); }

  void shutdown() {
    if (down_.exchange(true)) return;
    timer_.stop();
    io_.shutdown();
    compute_.shutdown();
  }

  double now_ms() const override {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now().time_since_epoch()).count();
  }

  std::int64_t wall_ms() const override {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
  }

  void send(const std::string& address, const std::string& path, std::string body, const std::string& job_id,
            ReplyHandler on_reply) override {
    io_.enqueue([this, address, path, body = std::move(body), job_id, on_reply = std::move(on_reply)] {
      ledger_.record({now_ms(), node_id_, address, path, job_id, static_cast<std::int64_t>(body.size())});
      std::optional<Reply> reply;
      try {
        reply = http_call(address, method_for(path), path, body, timeouts_);
      } catch (const Error&) {
      }
      if (reply) {
        ledger_.record({now_ms(), address, node_id_, "reply:" + path, job_id,
                        static_cast<std::int64_t>(reply->body.size())});
      }
      if (on_reply) on_reply(std::move(reply));
    });
  }

  void schedule(double delay_ms, std::function<void()> fn) override { timer_.after(delay_ms, std::move(fn)); }

  void compute(std::function<PredictionResult()> fn,
               std::function<void(PredictionResult, double)> done) override {
    compute_.enqueue([this, fn = std::move(fn), done = std::move(done)] {
      const double t0 = now_ms();
      auto r = fn();
      done(r, now_ms() - t0);
    });
  }

  const FrameLedger* ledger() const override { return &ledger_; }
  const std::string& node_id() const { return node_id_; }

 private:
  std::string node_id_;
  Timeouts timeouts_;
  FrameLedger ledger_;
  Timer timer_;
  httplib::ThreadPool io_;
  httplib::ThreadPool compute_;
  std::atomic<bool> down_{false};
};

using Handler = std::function<void(const Request&, const Responder&)>;

/// httplib server bound to a node handler. Handlers may answer later from
/// another thread; the connection waits up to `reply_timeout_ms`.
class HttpServer {
 public:
  explicit HttpServer(Handler handler, double reply_timeout_ms = 30000.0, std::size_t threads = 16)
      : handler_(std::move(handler)), reply_timeout_ms_(reply_timeout_ms) {
    server_.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    server_.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                 {"Access-Control-Allow-Headers", "Content-Type"},
                                 {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server_.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    auto bridge = [this](const httplib::Request& hr, httplib::Response& res) { serve(hr, res); };
    for (const char* p : {endpoint::kJob, endpoint::kInfer, endpoint::kEnsemble, endpoint::kEnsembleReply,
                          endpoint::kHeartbeat, endpoint::kQuarantine}) {
      server_.Post(p, bridge);
    }
    for (const char* p : {endpoint::kNodes, endpoint::kMetrics}) server_.Get(p, bridge);
  }

  ~HttpServer() { stop(); }

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Serves files under `dir` at `prefix`. Returns false if `dir` is missing.
  bool mount(const std::string& prefix, const std::string& dir) { return server_.set_mount_point(prefix, dir); }

  /// Reserves the port. Port 0 picks a free one.
  int bind(const std::string& host, int port) {
    const int bound = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw NetworkError("cannot bind " + format_address(host, port));
    return bound;
  }

  /// Accepts connections in the background.
  void listen() {
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

 private:
  void serve(const httplib::Request& hr, httplib::Response& res) {
    auto promise = std::make_shared<std::promise<Reply>>();
    auto answered = std::make_shared<std::atomic<bool>>(false);
    auto future = promise->get_future();
    Responder respond = [promise, answered](Reply r) {
      if (!answered->exchange(true)) promise->set_value(std::move(r));
    };
    try {
      handler_(Request{hr.method, hr.path, hr.body}, respond);
    } catch (const Error& e) {
      respond(error_reply(e.kind() == ErrorKind::Validation ? 400 : 500, e.what()));
    } catch (const std::exception& e) {
      respond(error_reply(500, e.what()));
    }
    if (future.wait_for(std::chrono::duration<double, std::milli>(reply_timeout_ms_)) != std::future_status::ready) {
      res.status = 504;
      res.set_content(error_reply(504, "node did not answer in time").body, "application/json");
      return;
    }
    const auto r = future.get();
    res.status = r.status;
    if (!r.body.empty()) res.set_content(r.body, "application/json");
  }

  Handler handler_;
  double reply_timeout_ms_;
  httplib::Server server_;
  std::thread thread_;
};

/// Real load reading: asks the worker for its status.
inline LoadProbe http_load_probe(Timeouts t = {500, 1000}) {
  return [t](const NodeView& n) -> std::optional<double> {
    try {
      const auto r = http_call(n.address, "GET", endpoint::kNodes, "", t);
      if (!r || r->status != 200) return std::nullopt;
      const auto arr = nlohmann::json::parse(r->body);
      if (!arr.is_array() || arr.empty()) return std::nullopt;
      return decode<Heartbeat>(arr.front().dump()).cpu_load;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  };
}

struct WorkerServerOptions {
  WorkerOptions worker;
  std::string listen_host = "127.0.0.1";
  int listen_port = 0;
  std::string advertise_host;  // defaults to listen_host
  std::string broker;          // empty: no heartbeats (cloud node)
  double heartbeat_interval_ms = 1000.0;
  std::vector<std::string> peers;
};

/// Worker or cloud node over HTTP, with a heartbeat thread to the broker.
class WorkerServer {
 public:
  WorkerServer(WorkerServerOptions opts, std::shared_ptr<const WorkerModel> model)
      : opts_(std::move(opts)), env_(opts_.worker.node_id), model_(std::move(model)), peers_(opts_.peers) {
    server_ = std::make_unique<HttpServer>([this](const Request& r, const Responder& respond) {
      if (!node_->handle(r, respond)) respond(error_reply(404, "no route for " + r.path));
    });
  }

  ~WorkerServer() { stop(); }

  /// Starts serving and returns the advertised address.
  std::string start() {
    const int port = server_->bind(opts_.listen_host, opts_.listen_port);
    address_ = format_address(opts_.advertise_host.empty() ? opts_.listen_host : opts_.advertise_host, port);
    auto wopts = opts_.worker;
    wopts.address = address_;
    wopts.peers = [this] {
      std::lock_guard lock(mu_);
      return peers_;
    };
    node_ = std::make_unique<WorkerNode>(std::move(wopts), model_, env_);
    server_->listen();
    if (!opts_.broker.empty()) heartbeat_ = std::thread([this] { heartbeat_loop(); });
    return address_;
  }

  void stop() {
    {
      std::lock_guard lock(mu_);
      if (stopped_) return;
      stopped_ = true;
    }
    cv_.notify_all();
    if (heartbeat_.joinable()) heartbeat_.join();
    server_->stop();
    env_.shutdown();
  }

  void set_peers(std::vector<std::string> peers) {
    std::lock_guard lock(mu_);
    peers_ = std::move(peers);
  }

  /// Sends one heartbeat now. Returns false if the broker is unreachable.
  bool beat() {
    const auto r = http_call(opts_.broker, "POST", endpoint::kHeartbeat, encode(node_->status()), {500, 1000});
    return r && r->status < 300;
  }

  const std::string& address() const { return address_; }
  WorkerNode& node() { return *node_; }
  HttpEnv& env() { return env_; }

 private:
  void heartbeat_loop() {
    std::unique_lock lock(mu_);
    while (!stopped_) {
      lock.unlock();
      try {
        beat();
      } catch (const Error&) {
      }
      lock.lock();
      cv_.wait_for(lock, std::chrono::duration<double, std::milli>(opts_.heartbeat_interval_ms),
                   [this] { return stopped_; });
    }
  }

  WorkerServerOptions opts_;
  HttpEnv env_;
  std::shared_ptr<const WorkerModel> model_;
  std::unique_ptr<WorkerNode> node_;
  std::unique_ptr<HttpServer> server_;
  std::string address_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::string> peers_;
  bool stopped_ = false;
  std::thread heartbeat_;
};

struct BrokerServerOptions {
  BrokerOptions broker;
  WorkerOptions local_worker;
  std::string listen_host = "127.0.0.1";
  int listen_port = 0;
  std::string advertise_host;
  std::string ui_dir;  // static gateway page served under /ui when present
  bool probe_load = true;
};

class BrokerServer {
 public:
  BrokerServer(BrokerServerOptions opts, std::shared_ptr<const WorkerModel> model)
      : opts_(std::move(opts)), env_(opts_.broker.node_id), model_(std::move(model)) {}

  ~BrokerServer() { stop(); }

  std::string start() {
    server_ = std::make_unique<HttpServer>([this](const Request& r, const Responder& respond) {
      node_->handle(r, respond);
    });
    if (!opts_.ui_dir.empty() && !server_->mount("/ui", opts_.ui_dir)) {
      throw invalid_argument("ui directory not found: " + opts_.ui_dir);
    }
    const int port = server_->bind(opts_.listen_host, opts_.listen_port);
    address_ = format_address(opts_.advertise_host.empty() ? opts_.listen_host : opts_.advertise_host, port);
    auto bopts = opts_.broker;
    bopts.address = address_;
    if (opts_.probe_load && !bopts.probe) bopts.probe = http_load_probe();
    node_ = std::make_unique<BrokerNode>(std::move(bopts), opts_.local_worker, model_, env_);
    server_->listen();
    return address_;
  }

  void stop() {
    if (server_) server_->stop();
    env_.shutdown();
  }

  const std::string& address() const { return address_; }
  BrokerNode& node() { return *node_; }

 private:
  BrokerServerOptions opts_;
  HttpEnv env_;
  std::shared_ptr<const WorkerModel> model_;
  std::unique_ptr<BrokerNode> node_;
  std::unique_ptr<HttpServer> server_;
  std::string address_;
};

struct SubmitResult {
  ArbitrationDecision decision;
  JobResponse response;
  JobTrace trace;
};

/// Gateway side of a job: asks the broker for a placement, then sends the
/// data to the assigned node. Timings are measured here.
class GatewayClient {
 public:
  explicit GatewayClient(std::string broker, Timeouts t = {}) : broker_(std::move(broker)), timeouts_(t) {
    parse_address(broker_);
  }

  SubmitResult submit(JobRequest job) {
    parse_payload(job.payload);
    const auto t0 = std::chrono::steady_clock::now();
    if (job.submitted_at == 0) {
      job.submitted_at = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::system_clock::now().time_since_epoch())
                             .count();
    }
    job.relay = false;
    SubmitResult out;
    const auto job_body = encode(job);
    const auto r1 = exchange(broker_, endpoint::kJob, job_body);
    out.decision = decode<ArbitrationDecision>(r1.body);
    const InferRequest ir{job.job_id, job.payload, out.decision.ensemble, out.decision.scenario, job.submitted_at};
    const auto infer_body = encode(ir);
    const auto r2 = exchange(out.decision.target, endpoint::kInfer, infer_body);
    out.response = decode<JobResponse>(r2.body);
    const double elapsed =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    out.response.timings.arbitration_ms = out.decision.arbitration_ms;
    out.response.timings.response_ms = elapsed;
    out.response.timings.comm_ms = elapsed - out.decision.arbitration_ms - out.response.timings.queuing_ms -
                                   out.response.timings.execution_ms;
    out.response.timings.bytes_up = static_cast<std::int64_t>(job_body.size() + infer_body.size());
    out.response.timings.bytes_down = static_cast<std::int64_t>(r1.body.size() + r2.body.size());

    auto& t = out.trace;
    const auto& tm = out.response.timings;
    t.job_id = out.response.job_id;
    t.scenario = out.response.scenario;
    t.arbitration_ms = tm.arbitration_ms;
    t.comm_ms = tm.comm_ms;
    t.queuing_ms = tm.queuing_ms;
    t.execution_ms = tm.execution_ms;
    t.response_ms = tm.response_ms;
    t.bytes_up = tm.bytes_up;
    t.bytes_down = tm.bytes_down;
    t.handled_by = out.response.handled_by;
    t.cls = out.response.cls;
    t.confidence = out.response.confidence;
    t.ensemble = out.decision.ensemble;
    t.partial = out.response.partial;
    t.fallback = out.response.fallback;
    return out;
  }

 private:
  Reply exchange(const std::string& address, const char* path, const std::string& body) {
    const auto r = http_call(address, "POST", path, body, timeouts_);
    if (!r) throw NetworkError("cannot reach " + address + path);
    if (r->status == 200) return *r;
    std::string msg = r->body;
    try {
      msg = nlohmann::json::parse(r->body).at("error").get<std::string>();
    } catch (const std::exception&) {
    }
    if (r->status == 400) throw ProtocolError(address + path + ": " + msg);
    throw NetworkError(address + path + ": HTTP " + std::to_string(r->status) + " " + msg);
  }

  std::string broker_;
  Timeouts timeouts_;
};

}  // namespace fogdx::net
