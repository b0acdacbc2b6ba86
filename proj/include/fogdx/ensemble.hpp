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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fogdx/error.hpp"
#include "fogdx/heartdata.hpp"
#include "fogdx/neuralnet.hpp"
#include "fogdx/random.hpp"

namespace fogdx {

enum class Distribution { EqualPartition, Bootstrap };

inline std::string_view to_string(Distribution d) { return d == Distribution::EqualPartition ? "equal" : "bootstrap"; }

inline Distribution parse_distribution(std::string_view s) {
  if (s == "equal") return Distribution::EqualPartition;
  if (s == "bootstrap") return Distribution::Bootstrap;
  throw invalid_argument("unknown distribution '" + std::string(s) + "' (expected equal|bootstrap)");
}

struct EnsembleSpec {
  std::size_t n_members = 1;
  Distribution distribution = Distribution::EqualPartition;
  std::vector<std::uint64_t> member_seeds;
  std::uint64_t data_seed = 0;  // partition shuffle

  void validate() const {
    if (n_members < 1) throw invalid_argument("EnsembleSpec: need at least one member");
    if (member_seeds.size() != n_members) throw invalid_argument("EnsembleSpec: one seed per member required");
    if (std::set(member_seeds.begin(), member_seeds.end()).size() != member_seeds.size()) {
      throw invalid_argument("EnsembleSpec: member seeds must be distinct");
    }
  }
};

/// Distinct member seeds derived from one base seed. Member 0 keeps the base
/// seed so a single-member ensemble trains exactly like a plain model.
inline EnsembleSpec make_ensemble_spec(std::size_t n, Distribution d, std::uint64_t base_seed) {
  EnsembleSpec spec{n, d, {}, derive_seed(base_seed, 0x5348415244)};
  for (std::size_t i = 0; i < n; ++i) spec.member_seeds.push_back(i == 0 ? base_seed : derive_seed(base_seed, i));
  spec.validate();
  return spec;
}

/// EqualPartition: disjoint shards after a seeded shuffle, sizes differing by
/// at most one (a single member gets the set untouched). Bootstrap: each
/// member draws |train| items with replacement from its own seed.
template <class T>
std::vector<std::vector<T>> distribute_data(std::span<const T> train, const EnsembleSpec& spec) {
  spec.validate();
  const std::size_t n = train.size();
  std::vector<std::vector<T>> shards(spec.n_members);
  if (spec.distribution == Distribution::EqualPartition) {
    if (spec.n_members > n) {
      throw invalid_argument("distribute_data: " + std::to_string(spec.n_members) + " members but only " +
                             std::to_string(n) + " training records");
    }
    if (spec.n_members == 1) {
      shards[0].assign(train.begin(), train.end());
      return shards;
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(spec.data_seed);
    shuffle(std::span(order), rng);
    const std::size_t base = n / spec.n_members;
    const std::size_t extra = n % spec.n_members;
    std::size_t k = 0;
    for (std::size_t m = 0; m < spec.n_members; ++m) {
      const std::size_t size = base + (m < extra ? 1 : 0);
      for (std::size_t j = 0; j < size; ++j) shards[m].push_back(train[order[k++]]);
    }
    return shards;
  }
  if (n == 0) throw invalid_argument("distribute_data: empty training set");
  for (std::size_t m = 0; m < spec.n_members; ++m) {
    Rng rng(derive_seed(spec.member_seeds[m], 0x424f4f54));
    shards[m].reserve(n);
    for (std::size_t j = 0; j < n; ++j) shards[m].push_back(train[uniform_index(rng, n)]);
  }
  return shards;
}

/// Trains member i on shard i from init_model(member_seeds[i]). Members are
/// independently seeded, so `parallel` does not change the result.
inline std::vector<TrainResult> train_ensemble(std::span<const Example> train_set, std::span<const Example> val_set,
                                               const EnsembleSpec& spec, const TrainConfig& cfg, bool parallel = true) {
  const auto shards = distribute_data(train_set, spec);
  auto train_member = [&](std::size_t i) {
    try {
      TrainConfig member_cfg = cfg;
      member_cfg.seed = spec.member_seeds[i];
      return train(init_model(spec.member_seeds[i]), shards[i], val_set, member_cfg);
    } catch (const Error& e) {
      throw Error(e.kind(), "ensemble member " + std::to_string(i) + ": " + e.what());
    }
  };
  std::vector<TrainResult> out;
  if (!parallel || spec.n_members == 1) {
    for (std::size_t i = 0; i < spec.n_members; ++i) out.push_back(train_member(i));
    return out;
  }
  std::vector<std::future<TrainResult>> jobs;
  for (std::size_t i = 0; i < spec.n_members; ++i) jobs.push_back(std::async(std::launch::async, train_member, i));
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

enum class Gate { Reliable, ConsultDoctor };

inline std::string_view to_string(Gate g) { return g == Gate::Reliable ? "Reliable" : "ConsultDoctor"; }

inline Gate parse_gate(std::string_view s) {
  if (s == "Reliable") return Gate::Reliable;
  if (s == "ConsultDoctor") return Gate::ConsultDoctor;
  throw ProtocolError("unknown gate '" + std::string(s) + "'");
}

struct PredictionResult {
  int cls = 1;
  double p0 = 0.5;
  double p1 = 0.5;
  double confidence = 0.0;
  std::vector<int> member_votes;  // empty for single-model predictions

  friend bool operator==(const PredictionResult&, const PredictionResult&) = default;
};

inline constexpr double kProbabilityTolerance = 1e-9;

/// 100 * (2 * max(p0, p1) - 1), in [0, 100].
inline double confidence(double p0, double p1) {
  if (!std::isfinite(p0) || !std::isfinite(p1) || p0 < 0.0 || p1 < 0.0 || p0 > 1.0 || p1 > 1.0 ||
      std::abs(p0 + p1 - 1.0) > kProbabilityTolerance) {
    throw invalid_argument("confidence: (" + detail::format_number(p0) + ", " + detail::format_number(p1) +
                           ") is not a probability pair");
  }
  return std::clamp(100.0 * (2.0 * std::max(p0, p1) - 1.0), 0.0, 100.0);
}

inline PredictionResult make_result(const Probabilities& p) {
  return {predicted_class(p), p.p0, p.p1, confidence(p.p0, p.p1), {}};
}

/// Majority vote over member argmaxes, ties toward class 1. Probabilities are
/// the member mean and only feed the confidence score.
inline PredictionResult vote(std::span<const Probabilities> members) {
  if (members.empty()) throw invalid_argument("vote: no member predictions");
  PredictionResult r;
  std::size_t ones = 0;
  double s0 = 0.0, s1 = 0.0;
  for (const auto& p : members) {
    const int v = predicted_class(p);
    r.member_votes.push_back(v);
    ones += static_cast<std::size_t>(v);
    s0 += p.p0;
    s1 += p.p1;
  }
  const std::size_t zeros = members.size() - ones;
  r.cls = ones >= zeros ? 1 : 0;
  const double total = s0 + s1;
  r.p0 = s0 / total;
  r.p1 = s1 / total;
  r.confidence = confidence(r.p0, r.p1);
  return r;
}

inline Gate gate(const PredictionResult& r, double threshold = 50.0) {
  return r.confidence < threshold ? Gate::ConsultDoctor : Gate::Reliable;
}

inline PredictionResult predict_ensemble(std::span<const MlpModel> models, const FeatureVector& x) {
  std::vector<Probabilities> probs;
  probs.reserve(models.size());
  for (const auto& m : models) probs.push_back(predict_proba(m, x));
  return vote(probs);
}

inline double ensemble_accuracy(std::span<const MlpModel> models, std::span<const Example> examples) {
  if (examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : examples) correct += predict_ensemble(models, ex.x).cls == ex.y ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

// Manifest written next to the member model files by `fogdx train`.
struct ManifestMember {
  std::string model;  // path relative to the manifest directory
  std::uint64_t seed = 0;
  std::size_t train_size = 0;

  friend bool operator==(const ManifestMember&, const ManifestMember&) = default;
};

struct EnsembleManifest {
  Distribution distribution = Distribution::EqualPartition;
  std::uint64_t data_seed = 0;
  std::string norm;  // norm stats JSON, relative path
  std::vector<ManifestMember> members;

  friend bool operator==(const EnsembleManifest&, const EnsembleManifest&) = default;
};

inline constexpr int kManifestVersion = 1;

inline nlohmann::ordered_json to_json(const EnsembleManifest& m) {
  nlohmann::ordered_json j;
  j["version"] = kManifestVersion;
  j["distribution"] = to_string(m.distribution);
  j["data_seed"] = m.data_seed;
  j["norm"] = m.norm;
  j["members"] = nlohmann::ordered_json::array();
  for (const auto& mem : m.members) {
    j["members"].push_back({{"model", mem.model}, {"seed", mem.seed}, {"train_size", mem.train_size}});
  }
  return j;
}

inline EnsembleManifest manifest_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != kManifestVersion) throw ParseError("manifest: unsupported version");
    EnsembleManifest m;
    m.distribution = parse_distribution(j.at("distribution").get<std::string>());
    m.data_seed = j.at("data_seed").get<std::uint64_t>();
    m.norm = j.at("norm").get<std::string>();
    for (const auto& e : j.at("members")) {
      m.members.push_back(
          {e.at("model").get<std::string>(), e.at("seed").get<std::uint64_t>(), e.at("train_size").get<std::size_t>()});
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
}

/// Members and normalization loaded from a manifest file.
struct LoadedEnsemble {
  EnsembleManifest manifest;
  NormStats norm;
  std::vector<MlpModel> models;
};

inline LoadedEnsemble load_ensemble(const std::string& manifest_path) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(manifest_path).parent_path();
  LoadedEnsemble e;
  try {
    e.manifest = manifest_from_json(nlohmann::json::parse(read_file(manifest_path)));
    e.norm = norm_stats_from_json(nlohmann::json::parse(read_file((dir / e.manifest.norm).string())));
  } catch (const nlohmann::json::parse_error& err) {
    throw ParseError(std::string("ensemble files: ") + err.what());
  }
  for (const auto& m : e.manifest.members) e.models.push_back(load_model((dir / m.model).string()));
  return e;
}

}  // namespace fogdx
