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

// Canonical instance of every wire message. The encoded form of each is
// frozen in tests/golden/<name>.json.

#include <functional>
#include <string>
#include <vector>

#include "fogdx/protocol.hpp"

namespace fogdx::golden {

inline const std::string kRow1 = "63,1,3,145,233,1,0,150,0,2.3,0,0,1";

inline JobRequest job_request() { return {"job-0001", kRow1, true, false, 1760000000000, false}; }

inline Heartbeat heartbeat() { return {"worker-1", 0.25, 3, 1760000000123, "10.0.0.11:8081"}; }

inline ArbitrationDecision arbitration_decision() {
  return {"job-0001", Scenario::Worker, "10.0.0.11:8081", "worker-1", true, 1760000000150, 115.5};
}

inline InferRequest infer_request() { return {"job-0001", kRow1, true, Scenario::Worker, 1760000000000}; }

inline JobResponse job_response() {
  JobResponse r;
  r.job_id = "job-0001";
  r.cls = 1;
  r.p0 = 0.25;
  r.p1 = 0.75;
  r.confidence = 50.0;
  r.gate = Gate::Reliable;
  r.handled_by = "worker-1";
  r.scenario = Scenario::Worker;
  r.member_votes = {1, 0, 1};
  r.partial = false;
  r.fallback = false;
  r.timings = {115.5, 8.25, 0.5, 51.0, 175.25, 548, 1104};
  return r;
}

inline EnsembleFanout ensemble_fanout() {
  return {"job-0001", kRow1, "worker-1", "10.0.0.11:8081", "10.0.0.12:8082"};
}

inline EnsembleReply ensemble_reply() { return {"job-0001", "worker-2", 0.125, 0.875}; }

inline QuarantineRequest quarantine_request() { return {"worker-2", true}; }

struct Case {
  std::string name;
  std::function<std::string()> encode;
  std::function<bool(const std::string&)> decodes_back;  // decode(body) == canonical
};

template <class T>
Case make_case(std::string name, T (*make)()) {
  return {std::move(name), [make] { return fogdx::encode(make()); },
          [make](const std::string& body) { return fogdx::decode<T>(body) == make(); }};
}

inline std::vector<Case> cases() {
  return {make_case("job_request", &job_request),           make_case("heartbeat", &heartbeat),
          make_case("arbitration_decision", &arbitration_decision), make_case("infer_request", &infer_request),
          make_case("job_response", &job_response),         make_case("ensemble_fanout", &ensemble_fanout),
          make_case("ensemble_reply", &ensemble_reply),     make_case("quarantine_request", &quarantine_request)};
}

}  // namespace fogdx::golden
