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
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fogdx/error.hpp"
#include "fogdx/protocol.hpp"

namespace fogdx {

/// Per-job timing decomposition and byte counts. A span left empty marks a
/// partially observed job.
struct JobTrace {
  std::string job_id;
  Scenario scenario = Scenario::Worker;
  std::optional<double> arbitration_ms;
  std::optional<double> comm_ms;
  std::optional<double> queuing_ms;
  std::optional<double> execution_ms;
  std::optional<double> response_ms;  // end to end, measured at the gateway
  std::int64_t bytes_up = 0;
  std::int64_t bytes_down = 0;
  std::string handled_by;
  int cls = 0;
  double confidence = 0.0;
  bool ensemble = false;
  bool partial = false;
  bool fallback = false;

  friend bool operator==(const JobTrace&, const JobTrace&) = default;
};

namespace detail {

inline void require_spans(const JobTrace& t,
                          std::initializer_list<std::pair<const char*, const std::optional<double>*>> spans) {
  std::string missing;
  for (const auto& [name, v] : spans) {
    if (!v->has_value()) missing += (missing.empty() ? "" : ", ") + std::string(name);
  }
  if (!missing.empty()) throw invalid_argument("incomplete trace " + t.job_id + ": missing " + missing);
}

}  // namespace detail

/// Communication time plus queuing delay; execution is excluded.
inline double latency(const JobTrace& t) {
  detail::require_spans(t, {{"comm_ms", &t.comm_ms}, {"queuing_ms", &t.queuing_ms}});
  return *t.comm_ms + *t.queuing_ms;
}

inline double execution(const JobTrace& t) {
  detail::require_spans(t, {{"execution_ms", &t.execution_ms}});
  return *t.execution_ms;
}

inline double arbitration(const JobTrace& t) {
  detail::require_spans(t, {{"arbitration_ms", &t.arbitration_ms}});
  return *t.arbitration_ms;
}

inline double response(const JobTrace& t) {
  detail::require_spans(t, {{"response_ms", &t.response_ms}});
  return *t.response_ms;
}

/// Mean absolute difference of consecutive response times.
inline double jitter(std::span<const double> response_times) {
  if (response_times.size() < 2) throw invalid_argument("jitter: need at least 2 samples");
  double sum = 0.0;
  for (std::size_t i = 1; i < response_times.size(); ++i) sum += std::abs(response_times[i] - response_times[i - 1]);
  return sum / static_cast<double>(response_times.size() - 1);
}

inline double jitter(std::span<const JobTrace> traces) {
  std::vector<double> r;
  r.reserve(traces.size());
  for (const auto& t : traces) r.push_back(response(t));
  return jitter(r);
}

/// One message body on the wire.
struct FrameRecord {
  double time_ms = 0.0;
  std::string from;
  std::string to;
  std::string kind;  // endpoint path, or "reply:<endpoint>"
  std::string job_id;
  std::int64_t bytes = 0;

  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

/// Append-only frame log. Thread-safe so HTTP handlers can share one.
class FrameLedger {
 public:
  void record(FrameRecord f) {
    std::lock_guard lock(mu_);
    frames_.push_back(std::move(f));
  }

  std::vector<FrameRecord> snapshot() const {
    std::lock_guard lock(mu_);
    return frames_;
  }

 private:
  mutable std::mutex mu_;
  std::vector<FrameRecord> frames_;
};

struct Window {
  double start_ms = -INFINITY;
  double end_ms = INFINITY;  // exclusive

  bool contains(double t) const { return t >= start_ms && t < end_ms; }
};

struct NodeBytes {
  std::int64_t tx = 0;
  std::int64_t rx = 0;

  friend bool operator==(const NodeBytes&, const NodeBytes&) = default;
};

struct BandwidthReport {
  std::map<std::string, NodeBytes> per_node;
  std::int64_t total = 0;
  std::size_t frames = 0;
};

/// Exact byte sums per node and direction over frames sent inside `window`.
inline BandwidthReport bandwidth(std::span<const FrameRecord> frames, Window window = {}) {
  BandwidthReport r;
  for (const auto& f : frames) {
    if (!window.contains(f.time_ms)) continue;
    r.per_node[f.from].tx += f.bytes;
    r.per_node[f.to].rx += f.bytes;
    r.total += f.bytes;
    ++r.frames;
  }
  return r;
}

/// Sum of per-job byte counts carried on the traces.
inline std::int64_t job_bytes(std::span<const JobTrace> traces) {
  std::int64_t total = 0;
  for (const auto& t : traces) total += t.bytes_up + t.bytes_down;
  return total;
}

enum class NodeClass { Worker, Broker, Cloud };

inline std::string_view to_string(NodeClass c) {
  switch (c) {
    case NodeClass::Worker:
      return "worker";
    case NodeClass::Broker:
      return "broker";
    case NodeClass::Cloud:
      return "cloud";
  }
  return "?";
}

struct PowerDraw {
  double idle_watts = 0.0;
  double busy_watts = 0.0;
};

/// Two-level linear power model per node class.
struct EnergyModel {
  PowerDraw worker{2.0, 5.0};
  PowerDraw broker{5.0, 25.0};
  PowerDraw cloud{20.0, 150.0};

  const PowerDraw& of(NodeClass c) const {
    switch (c) {
      case NodeClass::Broker:
        return broker;
      case NodeClass::Cloud:
        return cloud;
      default:
        return worker;
    }
  }

  void validate() const {
    for (const auto* p : {&worker, &broker, &cloud}) {
      if (!(p->idle_watts >= 0.0 && p->busy_watts >= p->idle_watts)) {
        throw invalid_argument("EnergyModel: need busy_watts >= idle_watts >= 0");
      }
    }
  }
};

struct NodeActivity {
  NodeClass cls = NodeClass::Worker;
  double busy_ms = 0.0;
};

/// Joules for one node over `horizon_ms`.
inline double energy_joules(const PowerDraw& p, double busy_ms, double horizon_ms) {
  if (busy_ms < 0.0 || busy_ms > horizon_ms) {
    throw invalid_argument("energy: busy time " + detail::format_number(busy_ms) + " ms exceeds horizon " +
                           detail::format_number(horizon_ms) + " ms");
  }
  return (busy_ms * p.busy_watts + (horizon_ms - busy_ms) * p.idle_watts) / 1000.0;
}

inline std::map<std::string, double> energy(const std::map<std::string, NodeActivity>& nodes, const EnergyModel& model,
                                            double horizon_ms) {
  model.validate();
  std::map<std::string, double> out;
  for (const auto& [id, a] : nodes) out[id] = energy_joules(model.of(a.cls), a.busy_ms, horizon_ms);
  return out;
}

struct MetricsReport {
  std::size_t jobs = 0;
  double mean_arbitration_ms = 0.0;
  double mean_latency_ms = 0.0;
  double mean_comm_ms = 0.0;
  double mean_queuing_ms = 0.0;
  double mean_execution_ms = 0.0;
  double mean_response_ms = 0.0;
  std::optional<double> jitter_ms;  // needs >= 2 jobs
  std::int64_t bandwidth_bytes = 0;
  std::map<std::string, NodeBytes> node_bytes;
  std::map<std::string, double> energy_joules;
  double total_energy_joules = 0.0;
  double horizon_ms = 0.0;
  std::map<std::string, std::size_t> scenarios;
};

inline MetricsReport summarize(std::span<const JobTrace> traces, std::span<const FrameRecord> frames,
                               const std::map<std::string, NodeActivity>& activity, const EnergyModel& model,
                               double horizon_ms) {
  MetricsReport r;
  r.jobs = traces.size();
  for (const auto& t : traces) {
    r.mean_arbitration_ms += arbitration(t);
    r.mean_latency_ms += latency(t);
    r.mean_comm_ms += *t.comm_ms;
    r.mean_queuing_ms += *t.queuing_ms;
    r.mean_execution_ms += execution(t);
    r.mean_response_ms += response(t);
    ++r.scenarios[std::string(to_string(t.scenario))];
  }
  if (!traces.empty()) {
    const double n = static_cast<double>(traces.size());
    for (double* v : {&r.mean_arbitration_ms, &r.mean_latency_ms, &r.mean_comm_ms, &r.mean_queuing_ms,
                      &r.mean_execution_ms, &r.mean_response_ms}) {
      *v /= n;
    }
  }
  if (traces.size() >= 2) r.jitter_ms = jitter(traces);
  const auto bw = bandwidth(frames);
  r.bandwidth_bytes = bw.total;
  r.node_bytes = bw.per_node;
  r.horizon_ms = horizon_ms;
  if (!activity.empty()) {
    r.energy_joules = energy(activity, model, horizon_ms);
    for (const auto& [id, j] : r.energy_joules) r.total_energy_joules += j;
  }
  return r;
}

inline nlohmann::ordered_json to_json(const JobTrace& t) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::ordered_json {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  return {{"job_id", t.job_id},
          {"scenario", to_string(t.scenario)},
          {"handled_by", t.handled_by},
          {"class", t.cls},
          {"confidence", t.confidence},
          {"ensemble", t.ensemble},
          {"partial", t.partial},
          {"fallback", t.fallback},
          {"arbitration_ms", opt(t.arbitration_ms)},
          {"comm_ms", opt(t.comm_ms)},
          {"queuing_ms", opt(t.queuing_ms)},
          {"execution_ms", opt(t.execution_ms)},
          {"response_ms", opt(t.response_ms)},
          {"bytes_up", t.bytes_up},
          {"bytes_down", t.bytes_down}};
}

inline JobTrace trace_from_json(const nlohmann::json& j) {
  auto opt = [&](const char* k) -> std::optional<double> {
    const auto it = j.find(k);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<double>();
  };
  try {
    JobTrace t;
    t.job_id = j.at("job_id").get<std::string>();
    t.scenario = parse_scenario(j.at("scenario").get<std::string>());
    t.handled_by = j.value("handled_by", "");
    t.cls = j.value("class", 0);
    t.confidence = j.value("confidence", 0.0);
    t.ensemble = j.value("ensemble", false);
    t.partial = j.value("partial", false);
    t.fallback = j.value("fallback", false);
    t.arbitration_ms = opt("arbitration_ms");
    t.comm_ms = opt("comm_ms");
    t.queuing_ms = opt("queuing_ms");
    t.execution_ms = opt("execution_ms");
    t.response_ms = opt("response_ms");
    t.bytes_up = j.value("bytes_up", std::int64_t{0});
    t.bytes_down = j.value("bytes_down", std::int64_t{0});
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("trace: ") + e.what());
  }
}

inline nlohmann::ordered_json traces_to_json(std::span<const JobTrace> traces) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& t : traces) arr.push_back(to_json(t));
  return arr;
}

inline nlohmann::ordered_json to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["jobs"] = r.jobs;
  j["mean_arbitration_ms"] = r.mean_arbitration_ms;
  j["mean_latency_ms"] = r.mean_latency_ms;
  j["mean_comm_ms"] = r.mean_comm_ms;
  j["mean_queuing_ms"] = r.mean_queuing_ms;
  j["mean_execution_ms"] = r.mean_execution_ms;
  j["mean_response_ms"] = r.mean_response_ms;
  j["jitter_ms"] = r.jitter_ms ? nlohmann::ordered_json(*r.jitter_ms) : nlohmann::ordered_json(nullptr);
  j["bandwidth_bytes"] = r.bandwidth_bytes;
  auto nodes = nlohmann::ordered_json::object();
  for (const auto& [id, b] : r.node_bytes) nodes[id] = {{"tx", b.tx}, {"rx", b.rx}};
  j["node_bytes"] = nodes;
  j["energy_joules"] = r.energy_joules;
  j["total_energy_joules"] = r.total_energy_joules;
  j["horizon_ms"] = r.horizon_ms;
  j["scenarios"] = r.scenarios;
  return j;
}

/// One row per job, for plotting.
inline std::string traces_csv(std::span<const JobTrace> traces) {
  std::ostringstream os;
  os << "job_id,scenario,handled_by,class,confidence,ensemble,partial,fallback,arbitration_ms,comm_ms,queuing_ms,"
        "execution_ms,response_ms,bytes_up,bytes_down\n";
  auto opt = [](const std::optional<double>& v) { return v ? detail::format_number(*v) : std::string(); };
  for (const auto& t : traces) {
    os << t.job_id << ',' << to_string(t.scenario) << ',' << t.handled_by << ',' << t.cls << ','
       << detail::format_number(t.confidence) << ',' << t.ensemble << ',' << t.partial << ',' << t.fallback << ','
       << opt(t.arbitration_ms) << ',' << opt(t.comm_ms) << ',' << opt(t.queuing_ms) << ',' << opt(t.execution_ms)
       << ',' << opt(t.response_ms) << ',' << t.bytes_up << ',' << t.bytes_down << '\n';
  }
  return os.str();
}

/// Fixed-width text rendering of a report.
inline std::string to_table(const MetricsReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3);
  auto row = [&](const std::string& name, const std::string& value) {
    os << std::left << std::setw(24) << name << value << '\n';
  };
  auto num = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(3) << v;
    return s.str();
  };
  row("jobs", std::to_string(r.jobs));
  row("arbitration (ms)", num(r.mean_arbitration_ms));
  row("latency (ms)", num(r.mean_latency_ms));
  row("  comm (ms)", num(r.mean_comm_ms));
  row("  queuing (ms)", num(r.mean_queuing_ms));
  row("execution (ms)", num(r.mean_execution_ms));
  row("response (ms)", num(r.mean_response_ms));
  row("jitter (ms)", r.jitter_ms ? num(*r.jitter_ms) : "n/a");
  row("bandwidth (bytes)", std::to_string(r.bandwidth_bytes));
  row("energy (J)", num(r.total_energy_joules));
  for (const auto& [id, j] : r.energy_joules) row("  " + id, num(j));
  return os.str();
}

}  // namespace fogdx
