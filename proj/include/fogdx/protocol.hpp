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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fogdx/ensemble.hpp"
#include "fogdx/error.hpp"
#include "fogdx/heartdata.hpp"

// JSON bodies exchanged over HTTP between gateway, broker, workers and cloud.
// Field names are frozen by the golden files under tests/golden/.

namespace fogdx {

namespace endpoint {
inline constexpr const char* kJob = "/api/job";                       // gateway -> broker: arbitration
inline constexpr const char* kInfer = "/api/infer";                   // gateway/broker -> executing node
inline constexpr const char* kEnsemble = "/api/ensemble";             // origin worker -> peer fanout
inline constexpr const char* kEnsembleReply = "/api/ensemble-reply";  // peer -> origin vote
inline constexpr const char* kHeartbeat = "/api/heartbeat";           // worker -> broker
inline constexpr const char* kNodes = "/api/nodes";                   // operator, GET
inline constexpr const char* kMetrics = "/api/metrics";               // operator, GET
inline constexpr const char* kQuarantine = "/api/quarantine";         // operator, POST
}  // namespace endpoint

enum class Scenario { BrokerOnly, Worker, Cloud };

inline std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::BrokerOnly:
      return "BrokerOnly";
    case Scenario::Worker:
      return "Worker";
    case Scenario::Cloud:
      return "Cloud";
  }
  return "?";
}

inline Scenario parse_scenario(std::string_view s) {
  if (s == "BrokerOnly") return Scenario::BrokerOnly;
  if (s == "Worker") return Scenario::Worker;
  if (s == "Cloud") return Scenario::Cloud;
  throw ProtocolError("unknown scenario '" + std::string(s) + "'");
}

using TimestampMs = std::int64_t;

struct JobRequest {
  std::string job_id;
  std::string payload;  // one CSV line of 13 features
  bool ensemble = false;
  bool latency_tolerant = false;
  TimestampMs submitted_at = 0;
  // Ask the broker to dispatch the job itself and answer with the JobResponse
  // instead of an ArbitrationDecision (used by clients that only talk to the broker).
  bool relay = false;

  friend bool operator==(const JobRequest&, const JobRequest&) = default;
};

struct Heartbeat {
  std::string node_id;
  double cpu_load = 0.0;
  std::int64_t queue_depth = 0;
  TimestampMs sent_at = 0;
  std::string address;  // where the broker can reach the node

  friend bool operator==(const Heartbeat&, const Heartbeat&) = default;
};

struct ArbitrationDecision {
  std::string job_id;
  Scenario scenario = Scenario::BrokerOnly;
  std::string target;     // address the gateway sends the data to
  std::string target_id;  // node id behind that address
  bool ensemble = false;
  TimestampMs decided_at = 0;
  double arbitration_ms = 0.0;

  friend bool operator==(const ArbitrationDecision&, const ArbitrationDecision&) = default;
};

struct InferRequest {
  std::string job_id;
  std::string payload;
  bool ensemble = false;
  Scenario scenario = Scenario::Worker;
  TimestampMs submitted_at = 0;

  friend bool operator==(const InferRequest&, const InferRequest&) = default;
};

/// Timing decomposition carried back to the gateway. Executing nodes fill the
/// queuing/execution spans; the gateway fills the rest.
struct Timings {
  double arbitration_ms = 0.0;
  double comm_ms = 0.0;
  double queuing_ms = 0.0;
  double execution_ms = 0.0;
  double response_ms = 0.0;
  std::int64_t bytes_up = 0;
  std::int64_t bytes_down = 0;

  friend bool operator==(const Timings&, const Timings&) = default;
};

struct JobResponse {
  std::string job_id;
  int cls = 0;
  double p0 = 0.5;
  double p1 = 0.5;
  double confidence = 0.0;
  Gate gate = Gate::ConsultDoctor;
  std::string handled_by;
  Scenario scenario = Scenario::Worker;
  std::vector<int> member_votes;
  bool partial = false;   // ensemble finished with fewer replies than peers
  bool fallback = false;  // cloud unreachable, served at the edge instead
  Timings timings;

  friend bool operator==(const JobResponse&, const JobResponse&) = default;
};

struct EnsembleFanout {
  std::string job_id;
  std::string payload;
  std::string origin;       // origin worker node id
  std::string reply_to;     // origin address for /api/ensemble-reply
  std::string destination;  // peer address

  friend bool operator==(const EnsembleFanout&, const EnsembleFanout&) = default;
};

struct EnsembleReply {
  std::string job_id;
  std::string node_id;
  double p0 = 0.5;
  double p1 = 0.5;

  friend bool operator==(const EnsembleReply&, const EnsembleReply&) = default;
};

struct QuarantineRequest {
  std::string node_id;
  bool quarantined = true;

  friend bool operator==(const QuarantineRequest&, const QuarantineRequest&) = default;
};

namespace detail {

using ojson = nlohmann::ordered_json;

template <class T>
T required(const nlohmann::json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end() || it->is_null()) throw ProtocolError(std::string("missing field: ") + name);
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ProtocolError(std::string("field ") + name + ": expected boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) throw ProtocolError(std::string("field ") + name + ": expected string");
    } else if constexpr (std::is_arithmetic_v<T>) {
      if (!it->is_number()) throw ProtocolError(std::string("field ") + name + ": expected number");
    }
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ProtocolError(std::string("field ") + name + ": wrong type");
  }
}

template <class T>
T optional_field(const nlohmann::json& j, const char* name, T fallback) {
  const auto it = j.find(name);
  if (it == j.end() || it->is_null()) return fallback;
  return required<T>(j, name);
}

inline nlohmann::json parse_body(std::string_view body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProtocolError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("message body must be a JSON object");
  return j;
}

inline void check_payload(const std::string& payload) {
  const auto fields = split(trim(payload), ',');
  if (fields.size() != kNumFeatures) {
    throw ProtocolError("payload: expected 13 fields, got " + std::to_string(fields.size()));
  }
  try {
    parse_record_line(payload);
  } catch (const ParseError& e) {
    throw ProtocolError(std::string("payload: ") + e.what());
  }
}

}  // namespace detail

/// Parses a 13-field payload line into a feature vector.
inline FeatureVector parse_payload(const std::string& payload) {
  detail::check_payload(payload);
  return parse_record_line(payload).features;
}

inline std::string make_payload(const FeatureVector& x) { return serialize_record(PatientRecord{x, std::nullopt}); }

// --- JSON mapping ---------------------------------------------------------

inline detail::ojson to_json(const JobRequest& m) {
  return {{"job_id", m.job_id},     {"payload", m.payload},           {"ensemble", m.ensemble},
          {"latency_tolerant", m.latency_tolerant}, {"submitted_at", m.submitted_at}, {"relay", m.relay}};
}

inline detail::ojson to_json(const Heartbeat& m) {
  return {{"node_id", m.node_id},
          {"cpu_load", m.cpu_load},
          {"queue_depth", m.queue_depth},
          {"sent_at", m.sent_at},
          {"address", m.address}};
}

inline detail::ojson to_json(const ArbitrationDecision& m) {
  return {{"job_id", m.job_id},       {"scenario", to_string(m.scenario)}, {"target", m.target},
          {"target_id", m.target_id}, {"ensemble", m.ensemble},            {"decided_at", m.decided_at},
          {"arbitration_ms", m.arbitration_ms}};
}

inline detail::ojson to_json(const InferRequest& m) {
  return {{"job_id", m.job_id},
          {"payload", m.payload},
          {"ensemble", m.ensemble},
          {"scenario", to_string(m.scenario)},
          {"submitted_at", m.submitted_at}};
}

inline detail::ojson to_json(const Timings& t) {
  return {{"arbitration_ms", t.arbitration_ms}, {"comm_ms", t.comm_ms},         {"queuing_ms", t.queuing_ms},
          {"execution_ms", t.execution_ms},     {"response_ms", t.response_ms}, {"bytes_up", t.bytes_up},
          {"bytes_down", t.bytes_down}};
}

inline detail::ojson to_json(const JobResponse& m) {
  return {{"job_id", m.job_id},
          {"class", m.cls},
          {"p0", m.p0},
          {"p1", m.p1},
          {"confidence", m.confidence},
          {"gate", to_string(m.gate)},
          {"handled_by", m.handled_by},
          {"scenario", to_string(m.scenario)},
          {"member_votes", m.member_votes},
          {"partial", m.partial},
          {"fallback", m.fallback},
          {"timings", to_json(m.timings)}};
}

inline detail::ojson to_json(const EnsembleFanout& m) {
  return {{"job_id", m.job_id},
          {"payload", m.payload},
          {"origin", m.origin},
          {"reply_to", m.reply_to},
          {"destination", m.destination}};
}

inline detail::ojson to_json(const EnsembleReply& m) {
  return {{"job_id", m.job_id}, {"node_id", m.node_id}, {"p0", m.p0}, {"p1", m.p1}};
}

inline detail::ojson to_json(const QuarantineRequest& m) {
  return {{"node_id", m.node_id}, {"quarantined", m.quarantined}};
}

template <class T>
T from_json(const nlohmann::json& j);

template <>
inline JobRequest from_json<JobRequest>(const nlohmann::json& j) {
  using namespace detail;
  JobRequest m;
  m.job_id = required<std::string>(j, "job_id");
  m.payload = required<std::string>(j, "payload");
  m.ensemble = optional_field<bool>(j, "ensemble", false);
  m.latency_tolerant = optional_field<bool>(j, "latency_tolerant", false);
  m.submitted_at = required<TimestampMs>(j, "submitted_at");
  m.relay = optional_field<bool>(j, "relay", false);
  check_payload(m.payload);
  return m;
}

template <>
inline Heartbeat from_json<Heartbeat>(const nlohmann::json& j) {
  using namespace detail;
  Heartbeat m;
  m.node_id = required<std::string>(j, "node_id");
  m.cpu_load = required<double>(j, "cpu_load");
  m.queue_depth = required<std::int64_t>(j, "queue_depth");
  m.sent_at = required<TimestampMs>(j, "sent_at");
  m.address = optional_field<std::string>(j, "address", "");
  if (!(m.cpu_load >= 0.0 && m.cpu_load <= 1.0)) throw ProtocolError("field cpu_load: must be within [0, 1]");
  if (m.queue_depth < 0) throw ProtocolError("field queue_depth: must be >= 0");
  return m;
}

template <>
inline ArbitrationDecision from_json<ArbitrationDecision>(const nlohmann::json& j) {
  using namespace detail;
  ArbitrationDecision m;
  m.job_id = required<std::string>(j, "job_id");
  m.scenario = parse_scenario(required<std::string>(j, "scenario"));
  m.target = required<std::string>(j, "target");
  m.target_id = optional_field<std::string>(j, "target_id", "");
  m.ensemble = required<bool>(j, "ensemble");
  m.decided_at = required<TimestampMs>(j, "decided_at");
  m.arbitration_ms = optional_field<double>(j, "arbitration_ms", 0.0);
  return m;
}

template <>
inline InferRequest from_json<InferRequest>(const nlohmann::json& j) {
  using namespace detail;
  InferRequest m;
  m.job_id = required<std::string>(j, "job_id");
  m.payload = required<std::string>(j, "payload");
  m.ensemble = optional_field<bool>(j, "ensemble", false);
  m.scenario = parse_scenario(optional_field<std::string>(j, "scenario", "Worker"));
  m.submitted_at = optional_field<TimestampMs>(j, "submitted_at", 0);
  check_payload(m.payload);
  return m;
}

template <>
inline Timings from_json<Timings>(const nlohmann::json& j) {
  using namespace detail;
  Timings t;
  t.arbitration_ms = optional_field<double>(j, "arbitration_ms", 0.0);
  t.comm_ms = optional_field<double>(j, "comm_ms", 0.0);
  t.queuing_ms = optional_field<double>(j, "queuing_ms", 0.0);
  t.execution_ms = optional_field<double>(j, "execution_ms", 0.0);
  t.response_ms = optional_field<double>(j, "response_ms", 0.0);
  t.bytes_up = optional_field<std::int64_t>(j, "bytes_up", 0);
  t.bytes_down = optional_field<std::int64_t>(j, "bytes_down", 0);
  return t;
}

template <>
inline JobResponse from_json<JobResponse>(const nlohmann::json& j) {
  using namespace detail;
  JobResponse m;
  m.job_id = required<std::string>(j, "job_id");
  m.cls = required<int>(j, "class");
  if (m.cls != 0 && m.cls != 1) throw ProtocolError("field class: must be 0 or 1");
  m.p0 = required<double>(j, "p0");
  m.p1 = required<double>(j, "p1");
  m.confidence = required<double>(j, "confidence");
  m.gate = parse_gate(required<std::string>(j, "gate"));
  m.handled_by = required<std::string>(j, "handled_by");
  m.scenario = parse_scenario(required<std::string>(j, "scenario"));
  if (const auto it = j.find("member_votes"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw ProtocolError("field member_votes: expected array");
    for (const auto& v : *it) {
      if (!v.is_number_integer()) throw ProtocolError("field member_votes: expected integers");
      m.member_votes.push_back(v.get<int>());
    }
  }
  m.partial = optional_field<bool>(j, "partial", false);
  m.fallback = optional_field<bool>(j, "fallback", false);
  if (const auto it = j.find("timings"); it != j.end() && it->is_object()) m.timings = from_json<Timings>(*it);
  return m;
}

template <>
inline EnsembleFanout from_json<EnsembleFanout>(const nlohmann::json& j) {
  using namespace detail;
  EnsembleFanout m;
  m.job_id = required<std::string>(j, "job_id");
  m.payload = required<std::string>(j, "payload");
  m.origin = required<std::string>(j, "origin");
  m.reply_to = required<std::string>(j, "reply_to");
  m.destination = optional_field<std::string>(j, "destination", "");
  check_payload(m.payload);
  return m;
}

template <>
inline EnsembleReply from_json<EnsembleReply>(const nlohmann::json& j) {
  using namespace detail;
  EnsembleReply m;
  m.job_id = required<std::string>(j, "job_id");
  m.node_id = required<std::string>(j, "node_id");
  m.p0 = required<double>(j, "p0");
  m.p1 = required<double>(j, "p1");
  return m;
}

template <>
inline QuarantineRequest from_json<QuarantineRequest>(const nlohmann::json& j) {
  using namespace detail;
  return {required<std::string>(j, "node_id"), optional_field<bool>(j, "quarantined", true)};
}

template <class T>
std::string encode(const T& msg) {
  return to_json(msg).dump();
}

template <class T>
T decode(std::string_view body) {
  return from_json<T>(detail::parse_body(body));
}

/// Exact body size in bytes; the unit of all bandwidth accounting.
template <class T>
std::size_t encoded_size(const T& msg) {
  return encode(msg).size();
}

/// One fanout frame per peer (the origin itself is skipped). No peers gives
/// an empty list, i.e. a single-member ensemble.
inline std::vector<EnsembleFanout> multicast_frame(const std::string& job_id, const std::string& payload,
                                                   const std::string& origin_id, const std::string& origin_address,
                                                   const std::vector<std::string>& peer_addresses) {
  if (origin_id.empty()) throw invalid_argument("multicast_frame: origin worker id required");
  std::vector<EnsembleFanout> frames;
  for (const auto& peer : peer_addresses) {
    if (peer == origin_address) continue;
    frames.push_back({job_id, payload, origin_id, origin_address, peer});
  }
  return frames;
}

inline JobResponse make_response(const std::string& job_id, const PredictionResult& r, const std::string& handled_by,
                                 Scenario scenario) {
  JobResponse resp;
  resp.job_id = job_id;
  resp.cls = r.cls;
  resp.p0 = r.p0;
  resp.p1 = r.p1;
  resp.confidence = r.confidence;
  resp.gate = gate(r);
  resp.handled_by = handled_by;
  resp.scenario = scenario;
  resp.member_votes = r.member_votes;
  return resp;
}

}  // namespace fogdx
