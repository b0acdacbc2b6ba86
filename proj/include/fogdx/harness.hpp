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
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fogdx/broker.hpp"
#include "fogdx/config.hpp"
#include "fogdx/ensemble.hpp"
#include "fogdx/heartdata.hpp"
#include "fogdx/metrics.hpp"
#include "fogdx/neuralnet.hpp"
#include "fogdx/node.hpp"
#include "fogdx/protocol.hpp"
#include "fogdx/random.hpp"
#include "fogdx/worker.hpp"

namespace fogdx {

/// Ten sample patients used as default job payloads. Labels follow the
/// dataset convention (1 = disease).
inline std::vector<PatientRecord> sample_patients() {
  return parse_csv(
      "63,1,3,145,233,1,0,150,0,2.3,0,0,1,0\n"
      "37,1,2,130,250,0,1,187,0,3.5,0,0,2,0\n"
      "41,0,1,130,204,0,0,172,0,1.4,2,0,2,0\n"
      "56,1,1,120,236,0,1,178,0,0.8,2,0,2,0\n"
      "57,0,0,120,354,0,1,163,1,0.6,2,0,2,0\n"
      "62,0,0,140,268,0,0,160,0,3.6,0,2,2,1\n"
      "63,1,0,130,254,0,0,147,0,1.4,1,1,3,1\n"
      "53,1,0,140,203,1,0,155,1,3.1,0,0,3,1\n"
      "56,1,2,130,256,1,0,142,1,0.6,1,1,1,1\n"
      "48,1,1,110,229,0,1,168,0,1,0,0,3,1\n");
}

struct SimConfig {
  std::uint64_t seed = 1;
  double lan_delay_ms = 2.0;
  double lan_jitter_ms = 1.0;  // half-width of the uniform draw
  double cloud_delay_ms = 100.0;
  double cloud_jitter_ms = 10.0;
  double worker_exec_ms = 50.0;
  double broker_exec_ms = 30.0;
  double cloud_exec_ms = 10.0;
  double load_check_ms = 0.0;
  double arbitration_base_ms = 115.0;
  double vote_ms = 1.0;
  int n_workers = 2;
  bool ensemble = false;
  bool latency_tolerant = false;
  bool cloud_enabled = true;
  bool cloud_up = true;
  int n_jobs = 100;
  double inter_arrival_ms = 500.0;
  double start_ms = -1.0;  // negative: just after the first heartbeats can land
  double min_duration_ms = 0.0;
  double heartbeat_interval_ms = 1000.0;
  double stale_timeout_ms = 3000.0;
  double overload_threshold = 0.9;
  std::int64_t big_job_bytes = 1 << 20;
  std::size_t broker_capacity = 2;
  double ensemble_timeout_ms = 2000.0;
  std::string manifest;  // optional trained ensemble for node models
  std::string dataset;   // optional CSV used for job payloads
  EnergyModel energy;

  static SimConfig from(const KeyValueConfig& kv) {
    SimConfig c;
    c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<std::int64_t>(c.seed)));
    c.lan_delay_ms = kv.get_double("lan_delay_ms", c.lan_delay_ms);
    c.lan_jitter_ms = kv.get_double("lan_jitter_ms", c.lan_jitter_ms);
    c.cloud_delay_ms = kv.get_double("cloud_delay_ms", c.cloud_delay_ms);
    c.cloud_jitter_ms = kv.get_double("cloud_jitter_ms", c.cloud_jitter_ms);
    c.worker_exec_ms = kv.get_double("worker_exec_ms", c.worker_exec_ms);
    c.broker_exec_ms = kv.get_double("broker_exec_ms", c.broker_exec_ms);
    c.cloud_exec_ms = kv.get_double("cloud_exec_ms", c.cloud_exec_ms);
    c.load_check_ms = kv.get_double("load_check_ms", c.load_check_ms);
    c.arbitration_base_ms = kv.get_double("arbitration_base_ms", c.arbitration_base_ms);
    c.vote_ms = kv.get_double("vote_ms", c.vote_ms);
    c.n_workers = static_cast<int>(kv.get_int("n_workers", c.n_workers));
    c.ensemble = kv.get_bool("ensemble", c.ensemble);
    c.latency_tolerant = kv.get_bool("latency_tolerant", c.latency_tolerant);
    c.cloud_enabled = kv.get_bool("cloud_enabled", c.cloud_enabled);
    c.cloud_up = kv.get_bool("cloud_up", c.cloud_up);
    c.n_jobs = static_cast<int>(kv.get_int("n_jobs", c.n_jobs));
    c.inter_arrival_ms = kv.get_double("inter_arrival_ms", c.inter_arrival_ms);
    c.start_ms = kv.get_double("start_ms", c.start_ms);
    c.min_duration_ms = kv.get_double("min_duration_ms", c.min_duration_ms);
    c.heartbeat_interval_ms = kv.get_double("heartbeat_interval_ms", c.heartbeat_interval_ms);
    c.stale_timeout_ms = kv.get_double("stale_timeout_ms", 3.0 * c.heartbeat_interval_ms);
    c.overload_threshold = kv.get_double("overload_threshold", c.overload_threshold);
    c.big_job_bytes = kv.get_int("big_job_bytes", c.big_job_bytes);
    c.broker_capacity = static_cast<std::size_t>(kv.get_int("broker_capacity", 2));
    c.ensemble_timeout_ms = kv.get_double("ensemble_timeout_ms", c.ensemble_timeout_ms);
    c.manifest = kv.get_string("manifest", "");
    c.dataset = kv.get_string("dataset", "");
    auto draw = [&](const std::string& cls, PowerDraw& p) {
      p.idle_watts = kv.get_double("energy." + cls + "_idle_watts", p.idle_watts);
      p.busy_watts = kv.get_double("energy." + cls + "_busy_watts", p.busy_watts);
    };
    draw("worker", c.energy.worker);
    draw("broker", c.energy.broker);
    draw("cloud", c.energy.cloud);
    c.validate();
    return c;
  }

  void validate() const {
    for (double v : {lan_delay_ms, lan_jitter_ms, cloud_delay_ms, cloud_jitter_ms, worker_exec_ms, broker_exec_ms,
                     cloud_exec_ms, load_check_ms, arbitration_base_ms, vote_ms, inter_arrival_ms, min_duration_ms,
                     ensemble_timeout_ms}) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw invalid_argument("SimConfig: delays and durations must be >= 0");
    }
    if (n_workers < 0) throw invalid_argument("SimConfig: n_workers must be >= 0");
    if (n_jobs < 0) throw invalid_argument("SimConfig: n_jobs must be >= 0");
    if (!(heartbeat_interval_ms > 0.0)) throw invalid_argument("SimConfig: heartbeat_interval_ms must be > 0");
    energy.validate();
  }

  /// Settings that are legal but unlike a real fog deployment.
  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    if (cloud_delay_ms < lan_delay_ms) w.push_back("cloud_delay_ms < lan_delay_ms");
    return w;
  }

  BrokerConfig broker_config() const {
    BrokerConfig b;
    b.overload_threshold = overload_threshold;
    b.heartbeat_interval_ms = heartbeat_interval_ms;
    b.stale_timeout_ms = stale_timeout_ms;
    b.big_job_bytes = big_job_bytes;
    b.cloud_endpoint = cloud_enabled ? "cloud" : "";
    b.load_check_ms = load_check_ms;
    b.broker_capacity = broker_capacity;
    return b;
  }
};

/// Single-threaded virtual clock. Events at equal times run in scheduling order.
class EventLoop {
 public:
  double now() const { return now_; }

  void schedule_at(double t, std::function<void()> fn) { events_.push({std::max(t, now_), seq_++, std::move(fn)}); }

  void run() {
    while (!events_.empty()) {
      auto ev = events_.top();
      events_.pop();
      now_ = ev.at;
      ev.fn();
    }
  }

 private:
  struct Event {
    double at;
    std::uint64_t seq;
    std::function<void()> fn;
    bool operator>(const Event& o) const { return at != o.at ? at > o.at : seq > o.seq; }
  };

  double now_ = 0.0;
  std::uint64_t seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
};

/// In-process message transport with seeded per-link delays. Every frame is
/// logged to the ledger and, separately, tallied in raw counters.
class SimNetwork {
 public:
  using Handler = std::function<void(const Request&, const Responder&)>;

  SimNetwork(EventLoop& loop, const SimConfig& cfg) : loop_(loop), cfg_(cfg), rng_(derive_seed(cfg.seed, 0x4e4554)) {}

  void attach(const std::string& address, Handler h) { nodes_[address] = std::move(h); }
  void set_down(const std::string& address) { down_.insert(address); }

  void transmit(const std::string& from, const std::string& to, const std::string& path, std::string body,
                const std::string& job_id, ReplyHandler on_reply) {
    log_frame(from, to, path, job_id, body.size());
    const double delay = draw_delay(from, to);
    loop_.schedule_at(loop_.now() + delay, [this, from, to, path, body = std::move(body), job_id,
                                            on_reply = std::move(on_reply)]() mutable {
      touch();
      const auto it = nodes_.find(to);
      if (it == nodes_.end() || down_.count(to)) {
        if (on_reply) {
          const double back = draw_delay(to, from);
          loop_.schedule_at(loop_.now() + back, [on_reply] { on_reply(std::nullopt); });
        }
        return;
      }
      const Request req{method_for(path), path, std::move(body)};
      it->second(req, [this, from, to, path, job_id, on_reply](Reply r) {
        if (!on_reply) return;
        log_frame(to, from, "reply:" + path, job_id, r.body.size());
        const double back = draw_delay(to, from);
        loop_.schedule_at(loop_.now() + back, [this, on_reply, r = std::move(r)] {
          touch();
          on_reply(r);
        });
      });
    });
  }

  const FrameLedger& ledger() const { return ledger_; }
  std::int64_t raw_bytes() const { return raw_bytes_; }
  std::size_t raw_frames() const { return raw_frames_; }
  double last_activity_ms() const { return last_activity_; }
  void touch() { last_activity_ = std::max(last_activity_, loop_.now()); }
  EventLoop& loop() { return loop_; }

  static std::string method_for(const std::string& path) {
    return path == endpoint::kNodes || path == endpoint::kMetrics ? "GET" : "POST";
  }

 private:
  bool is_cloud_link(const std::string& a, const std::string& b) const { return a == "cloud" || b == "cloud"; }

  double draw_delay(const std::string& a, const std::string& b) {
    const bool cloud = is_cloud_link(a, b);
    const double d = cloud ? cfg_.cloud_delay_ms : cfg_.lan_delay_ms;
    const double h = cloud ? cfg_.cloud_jitter_ms : cfg_.lan_jitter_ms;
    return std::max(0.0, uniform(rng_, d - h, d + h));
  }

  void log_frame(const std::string& from, const std::string& to, const std::string& kind, const std::string& job_id,
                 std::size_t bytes) {
    ledger_.record({loop_.now(), from, to, kind, job_id, static_cast<std::int64_t>(bytes)});
    raw_bytes_ += static_cast<std::int64_t>(bytes);
    ++raw_frames_;
  }

  EventLoop& loop_;
  const SimConfig& cfg_;
  Rng rng_;
  std::map<std::string, Handler> nodes_;
  std::set<std::string> down_;
  FrameLedger ledger_;
  std::int64_t raw_bytes_ = 0;
  std::size_t raw_frames_ = 0;
  double last_activity_ = 0.0;
};

/// NodeEnv over the simulated network; compute takes a fixed service time.
class SimNodeEnv final : public NodeEnv {
 public:
  SimNodeEnv(SimNetwork& net, std::string id, double exec_ms) : net_(net), id_(std::move(id)), exec_ms_(exec_ms) {}

  double now_ms() const override { return net_.loop().now(); }
  std::int64_t wall_ms() const override { return static_cast<std::int64_t>(std::floor(net_.loop().now())); }

  void send(const std::string& address, const std::string& path, std::string body, const std::string& job_id,
            ReplyHandler on_reply) override {
    net_.transmit(id_, address, path, std::move(body), job_id, std::move(on_reply));
  }

  void schedule(double delay_ms, std::function<void()> fn) override {
    net_.loop().schedule_at(net_.loop().now() + delay_ms, std::move(fn));
  }

  void compute(std::function<PredictionResult()> fn,
               std::function<void(PredictionResult, double)> done) override {
    auto r = fn();
    const double exec = exec_ms_;
    net_.loop().schedule_at(net_.loop().now() + exec, [this, done = std::move(done), r = std::move(r), exec] {
      net_.touch();
      done(r, exec);
    });
  }

  const FrameLedger* ledger() const override { return &net_.ledger(); }

 private:
  SimNetwork& net_;
  std::string id_;
  double exec_ms_;
};

/// Models served by the simulated nodes. Workers cycle through `workers`.
struct SimModels {
  std::vector<std::shared_ptr<const WorkerModel>> workers;
  std::shared_ptr<const WorkerModel> broker;
  std::shared_ptr<const WorkerModel> cloud;
};

struct ScenarioResult {
  std::vector<JobTrace> traces;  // submission order
  std::vector<FrameRecord> frames;
  MetricsReport report;
  std::int64_t transport_bytes = 0;  // independent tally kept by the transport
  std::size_t transport_frames = 0;
  std::size_t jobs_submitted = 0;
  std::size_t responses_delivered = 0;
  double horizon_ms = 0.0;
  std::map<std::string, NodeActivity> activity;
  std::vector<std::string> warnings;
};

inline std::string job_name(int i) {
  std::ostringstream os;
  os << "job-" << std::setw(4) << std::setfill('0') << i;
  return os.str();
}

inline std::string worker_name(int i) { return "worker-" + std::to_string(i); }

/// Default models: seeded untrained networks, normalized with the sample patients.
inline SimModels default_models(const SimConfig& cfg) {
  const auto norm = fit_norm(sample_patients());
  SimModels m;
  for (int i = 0; i < std::max(1, cfg.n_workers); ++i) {
    m.workers.push_back(std::make_shared<WorkerModel>(WorkerModel{init_model(derive_seed(cfg.seed, 100 + i)), norm}));
  }
  m.broker = std::make_shared<WorkerModel>(WorkerModel{init_model(derive_seed(cfg.seed, 99)), norm});
  m.cloud = m.broker;
  return m;
}

inline SimModels models_from_manifest(const std::string& path) {
  auto e = load_ensemble(path);
  if (e.models.empty()) throw invalid_argument("manifest lists no members: " + path);
  SimModels m;
  for (auto& model : e.models) m.workers.push_back(std::make_shared<WorkerModel>(WorkerModel{model, e.norm}));
  m.broker = m.workers.front();
  m.cloud = m.workers.front();
  return m;
}

/// Runs one simulated deployment: a gateway submitting `n_jobs` jobs, a broker,
/// `n_workers` workers and (optionally) a cloud node.
inline ScenarioResult run_scenario(const SimConfig& cfg, const SimModels& models,
                                   std::span<const FeatureVector> payloads) {
  cfg.validate();
  if (payloads.empty()) throw invalid_argument("run_scenario: no payloads");
  if (models.workers.empty() || !models.broker || !models.cloud) throw invalid_argument("run_scenario: models missing");

  EventLoop loop;
  SimNetwork net(loop, cfg);
  ScenarioResult result;
  result.warnings = cfg.warnings();

  std::vector<std::string> worker_ids;
  for (int i = 1; i <= cfg.n_workers; ++i) worker_ids.push_back(worker_name(i));

  std::vector<std::unique_ptr<SimNodeEnv>> envs;
  auto make_env = [&](const std::string& id, double exec) -> SimNodeEnv& {
    envs.push_back(std::make_unique<SimNodeEnv>(net, id, exec));
    return *envs.back();
  };

  WorkerOptions base_worker;
  base_worker.ensemble_timeout_ms = cfg.ensemble_timeout_ms;
  base_worker.vote_overhead_ms = cfg.vote_ms;
  base_worker.load_window_ms = cfg.heartbeat_interval_ms;

  BrokerOptions bopts;
  bopts.config = cfg.broker_config();
  bopts.arbitration_model = [base = cfg.arbitration_base_ms, per = cfg.load_check_ms](std::size_t checks) {
    return modeled_arbitration_ms(base, per, checks);
  };
  BrokerNode broker(bopts, base_worker, models.broker, make_env("broker", cfg.broker_exec_ms));
  net.attach("broker", [&broker](const Request& r, const Responder& respond) { broker.handle(r, respond); });

  std::vector<std::unique_ptr<WorkerNode>> workers;
  for (std::size_t i = 0; i < worker_ids.size(); ++i) {
    WorkerOptions o = base_worker;
    o.node_id = o.address = worker_ids[i];
    o.peers = [worker_ids, self = worker_ids[i]] {
      std::vector<std::string> p;
      for (const auto& w : worker_ids) {
        if (w != self) p.push_back(w);
      }
      return p;
    };
    auto& env = make_env(worker_ids[i], cfg.worker_exec_ms);
    workers.push_back(std::make_unique<WorkerNode>(o, models.workers[i % models.workers.size()], env));
    auto* w = workers.back().get();
    net.attach(worker_ids[i], [w](const Request& r, const Responder& respond) {
      if (!w->handle(r, respond)) respond(error_reply(404, "no route"));
    });
  }

  std::unique_ptr<WorkerNode> cloud;
  if (cfg.cloud_enabled) {
    WorkerOptions o = base_worker;
    o.node_id = o.address = "cloud";
    o.node_class = NodeClass::Cloud;
    cloud = std::make_unique<WorkerNode>(o, models.cloud, make_env("cloud", cfg.cloud_exec_ms));
    net.attach("cloud", [c = cloud.get()](const Request& r, const Responder& respond) {
      if (!c->handle(r, respond)) respond(error_reply(404, "no route"));
    });
    if (!cfg.cloud_up) net.set_down("cloud");
  }

  auto& gateway = make_env("gateway", 0.0);
  std::size_t outstanding = static_cast<std::size_t>(cfg.n_jobs);
  result.traces.resize(static_cast<std::size_t>(cfg.n_jobs));
  std::vector<bool> delivered(result.traces.size(), false);

  // Heartbeats, each worker on its own timer, until all jobs are answered.
  std::function<void(std::size_t)> beat = [&](std::size_t i) {
    if (outstanding == 0 && loop.now() >= cfg.min_duration_ms) return;
    auto& w = *workers[i];
    envs[i + 1]->send("broker", endpoint::kHeartbeat, encode(w.status()), "", {});
    loop.schedule_at(loop.now() + cfg.heartbeat_interval_ms, [&beat, i] { beat(i); });
  };
  for (std::size_t i = 0; i < workers.size(); ++i) loop.schedule_at(0.0, [&beat, i] { beat(i); });

  const double start = cfg.start_ms >= 0.0 ? cfg.start_ms : cfg.lan_delay_ms + cfg.lan_jitter_ms + 1.0;
  for (int i = 0; i < cfg.n_jobs; ++i) {
    const double t0 = start + cfg.inter_arrival_ms * i;
    loop.schedule_at(t0, [&, i, t0] {
      const auto idx = static_cast<std::size_t>(i);
      JobRequest jr{job_name(i), make_payload(payloads[idx % payloads.size()]), cfg.ensemble, cfg.latency_tolerant,
                    gateway.wall_ms(), false};
      ++result.jobs_submitted;
      gateway.send("broker", endpoint::kJob, encode(jr), jr.job_id, [&, jr, idx, t0](std::optional<Reply> r) {
        if (!r || r->status != 200) throw internal_error("sim: arbitration failed for " + jr.job_id);
        const auto decision = decode<ArbitrationDecision>(r->body);
        InferRequest ir{jr.job_id, jr.payload, decision.ensemble, decision.scenario, jr.submitted_at};
        gateway.send(decision.target, endpoint::kInfer, encode(ir), jr.job_id,
                     [&, decision, idx, t0](std::optional<Reply> r2) {
                       if (!r2 || r2->status != 200) {
                         throw internal_error("sim: inference failed for " + decision.job_id +
                                              (r2 ? ": " + r2->body : ""));
                       }
                       const auto resp = decode<JobResponse>(r2->body);
                       auto& t = result.traces[idx];
                       t.job_id = resp.job_id;
                       t.scenario = resp.scenario;
                       t.handled_by = resp.handled_by;
                       t.cls = resp.cls;
                       t.confidence = resp.confidence;
                       t.ensemble = decision.ensemble;
                       t.partial = resp.partial;
                       t.fallback = resp.fallback;
                       t.response_ms = loop.now() - t0;
                       t.arbitration_ms = decision.arbitration_ms;
                       t.queuing_ms = resp.timings.queuing_ms;
                       t.execution_ms = resp.timings.execution_ms;
                       t.comm_ms = *t.response_ms - *t.arbitration_ms - *t.queuing_ms - *t.execution_ms;
                       delivered[idx] = true;
                       ++result.responses_delivered;
                       --outstanding;
                     });
      });
    });
  }

  loop.run();

  result.frames = net.ledger().snapshot();
  std::map<std::string, std::size_t> by_job;
  for (std::size_t i = 0; i < result.traces.size(); ++i) by_job[result.traces[i].job_id] = i;
  for (const auto& f : result.frames) {
    if (f.job_id.empty()) continue;
    const auto it = by_job.find(f.job_id);
    if (it == by_job.end()) continue;
    auto& t = result.traces[it->second];
    const bool down = f.kind.rfind("reply:", 0) == 0 || f.kind == endpoint::kEnsembleReply;
    (down ? t.bytes_down : t.bytes_up) += f.bytes;
  }

  result.transport_bytes = net.raw_bytes();
  result.transport_frames = net.raw_frames();
  result.horizon_ms = std::max(net.last_activity_ms(), cfg.min_duration_ms);
  result.activity["broker"] = {NodeClass::Broker, broker.local_worker().busy_ms()};
  for (std::size_t i = 0; i < workers.size(); ++i) result.activity[worker_ids[i]] = {NodeClass::Worker, workers[i]->busy_ms()};
  if (cloud) result.activity["cloud"] = {NodeClass::Cloud, cloud->busy_ms()};
  for (auto& [id, a] : result.activity) a.busy_ms = std::min(a.busy_ms, result.horizon_ms);
  result.report = summarize(result.traces, result.frames, result.activity, cfg.energy, result.horizon_ms);
  return result;
}

/// Loads models and payloads named in the config (or the built-in defaults).
inline ScenarioResult run_scenario(const SimConfig& cfg) {
  const auto models = cfg.manifest.empty() ? default_models(cfg) : models_from_manifest(cfg.manifest);
  std::vector<FeatureVector> payloads;
  for (const auto& r : cfg.dataset.empty() ? sample_patients() : parse_csv(read_file(cfg.dataset))) {
    payloads.push_back(r.features);
  }
  return run_scenario(cfg, models, payloads);
}

inline std::string traces_json_text(const ScenarioResult& r) { return traces_to_json(r.traces).dump(2); }

struct SweepOptions {
  std::uint64_t split_seed = 1;
  TrainConfig train;
  int max_workers = 5;
  Distribution distribution = Distribution::EqualPartition;
};

struct SweepRow {
  int n_workers = 0;
  bool ensemble = false;
  double train_accuracy = 0.0;  // mean over members, each on its own shard
  double test_accuracy = 0.0;   // mean member accuracy, or the vote's accuracy with ensemble on
  double arbitration_ms = 0.0;
  double latency_ms = 0.0;
  double jitter_ms = 0.0;
  double execution_ms = 0.0;
  std::int64_t bandwidth_bytes = 0;
  double energy_joules = 0.0;
};

/// For n = 1..max_workers: trains an n-member ensemble on the training split,
/// then simulates n workers serving the test split with ensemble off and on.
inline std::vector<SweepRow> sweep_nodes(const SimConfig& base, std::span<const PatientRecord> dataset,
                                         const SweepOptions& opts) {
  const auto split = split_dataset(dataset, opts.split_seed);
  const auto norm = fit_norm(split.train);
  const auto train_set = make_examples(split.train, norm);
  const auto val_set = make_examples(split.validation, norm);
  const auto test_set = make_examples(split.test, norm);
  std::vector<FeatureVector> payloads;
  for (const auto& r : split.test) payloads.push_back(r.features);

  std::vector<SweepRow> rows;
  for (int n = 1; n <= opts.max_workers; ++n) {
    const auto spec = make_ensemble_spec(static_cast<std::size_t>(n), opts.distribution, opts.train.seed);
    const auto shards = distribute_data(std::span<const Example>(train_set), spec);
    const auto members = train_ensemble(train_set, val_set, spec, opts.train);
    std::vector<MlpModel> models;
    double train_acc = 0.0, test_acc = 0.0;
    for (std::size_t i = 0; i < members.size(); ++i) {
      models.push_back(members[i].model);
      train_acc += accuracy(members[i].model, shards[i]);
      test_acc += accuracy(members[i].model, test_set);
    }
    train_acc /= n;
    test_acc /= n;
    const double vote_acc = ensemble_accuracy(models, test_set);

    SimModels sim_models;
    for (const auto& m : models) sim_models.workers.push_back(std::make_shared<WorkerModel>(WorkerModel{m, norm}));
    sim_models.broker = sim_models.cloud = sim_models.workers.front();

    for (bool ens : {false, true}) {
      SimConfig cfg = base;
      cfg.n_workers = n;
      cfg.ensemble = ens;
      const auto run = run_scenario(cfg, sim_models, payloads);
      SweepRow row;
      row.n_workers = n;
      row.ensemble = ens;
      row.train_accuracy = train_acc;
      row.test_accuracy = ens ? vote_acc : test_acc;
      row.arbitration_ms = run.report.mean_arbitration_ms;
      row.latency_ms = run.report.mean_latency_ms;
      row.jitter_ms = run.report.jitter_ms.value_or(0.0);
      row.execution_ms = run.report.mean_execution_ms;
      row.bandwidth_bytes = run.report.bandwidth_bytes;
      row.energy_joules = run.report.total_energy_joules;
      rows.push_back(row);
    }
  }
  return rows;
}

inline std::string sweep_csv(std::span<const SweepRow> rows) {
  std::ostringstream os;
  os << "n_workers,ensemble,train_accuracy,test_accuracy,arbitration_ms,latency_ms,jitter_ms,execution_ms,"
        "bandwidth_bytes,energy_joules\n";
  for (const auto& r : rows) {
    os << r.n_workers << ',' << (r.ensemble ? 1 : 0) << ',' << detail::format_number(r.train_accuracy) << ','
       << detail::format_number(r.test_accuracy) << ',' << detail::format_number(r.arbitration_ms) << ','
       << detail::format_number(r.latency_ms) << ',' << detail::format_number(r.jitter_ms) << ','
       << detail::format_number(r.execution_ms) << ',' << r.bandwidth_bytes << ','
       << detail::format_number(r.energy_joules) << '\n';
  }
  return os.str();
}

}  // namespace fogdx
