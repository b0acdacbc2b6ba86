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

#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fogdx/ensemble.hpp"
#include "fogdx/heartdata.hpp"
#include "fogdx/neuralnet.hpp"

// Offline pipeline: split, normalize, train the members, evaluate, write
// the model files with their manifest.

namespace fogdx {

struct PipelineOptions {
  std::size_t members = 1;
  Distribution distribution = Distribution::EqualPartition;
  std::uint64_t split_seed = 1;
  TrainConfig train;  // train.seed is the base member seed
  double gate_threshold = 50.0;
};

struct MemberReport {
  std::uint64_t seed = 0;
  std::size_t train_size = 0;
  double train_accuracy = 0.0;  // on the member's own shard
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
};

/// How the confidence gate behaves on the test split.
struct ConfidenceReport {
  double threshold = 50.0;
  std::size_t predictions = 0;
  std::size_t incorrect = 0;
  std::optional<double> max_incorrect_confidence;
  std::size_t gated = 0;            // confidence below threshold
  std::size_t incorrect_gated = 0;  // wrong and flagged for a doctor
};

struct TrainingReport {
  std::size_t train_size = 0, validation_size = 0, test_size = 0;
  std::vector<MemberReport> members;
  double mean_member_train_accuracy = 0.0;
  double mean_member_test_accuracy = 0.0;
  double ensemble_val_accuracy = 0.0;
  double ensemble_test_accuracy = 0.0;
  ConfidenceReport confidence;
};

struct TrainedEnsemble {
  EnsembleSpec spec;
  NormStats norm;
  std::vector<MlpModel> models;
  TrainingReport report;
};

inline ConfidenceReport confidence_report(std::span<const MlpModel> models, std::span<const Example> test,
                                          double threshold = 50.0) {
  ConfidenceReport c;
  c.threshold = threshold;
  for (const auto& ex : test) {
    const auto r = predict_ensemble(models, ex.x);
    const bool wrong = r.cls != ex.y;
    const bool flagged = gate(r, threshold) == Gate::ConsultDoctor;
    ++c.predictions;
    c.gated += flagged ? 1 : 0;
    if (wrong) {
      ++c.incorrect;
      c.incorrect_gated += flagged ? 1 : 0;
      c.max_incorrect_confidence = std::max(c.max_incorrect_confidence.value_or(0.0), r.confidence);
    }
  }
  return c;
}

inline TrainedEnsemble train_pipeline(std::span<const PatientRecord> records, const PipelineOptions& opts) {
  opts.train.validate();
  const auto split = split_dataset(records, opts.split_seed);
  TrainedEnsemble out;
  out.norm = fit_norm(split.train);
  const auto train_set = make_examples(split.train, out.norm);
  const auto val_set = make_examples(split.validation, out.norm);
  const auto test_set = make_examples(split.test, out.norm);

  out.spec = make_ensemble_spec(opts.members, opts.distribution, opts.train.seed);
  const auto shards = distribute_data(std::span<const Example>(train_set), out.spec);
  auto results = train_ensemble(train_set, val_set, out.spec, opts.train);

  auto& rep = out.report;
  rep.train_size = split.train.size();
  rep.validation_size = split.validation.size();
  rep.test_size = split.test.size();
  for (std::size_t i = 0; i < results.size(); ++i) {
    MemberReport m;
    m.seed = out.spec.member_seeds[i];
    m.train_size = shards[i].size();
    m.train_accuracy = accuracy(results[i].model, shards[i]);
    m.val_accuracy = accuracy(results[i].model, val_set);
    m.test_accuracy = accuracy(results[i].model, test_set);
    rep.mean_member_train_accuracy += m.train_accuracy / static_cast<double>(results.size());
    rep.mean_member_test_accuracy += m.test_accuracy / static_cast<double>(results.size());
    rep.members.push_back(m);
    out.models.push_back(std::move(results[i].model));
  }
  rep.ensemble_val_accuracy = ensemble_accuracy(out.models, val_set);
  rep.ensemble_test_accuracy = ensemble_accuracy(out.models, test_set);
  rep.confidence = confidence_report(out.models, test_set, opts.gate_threshold);
  return out;
}

inline nlohmann::ordered_json to_json(const ConfidenceReport& c) {
  nlohmann::ordered_json j;
  j["threshold"] = c.threshold;
  j["predictions"] = c.predictions;
  j["incorrect"] = c.incorrect;
  j["max_incorrect_confidence"] =
      c.max_incorrect_confidence ? nlohmann::ordered_json(*c.max_incorrect_confidence) : nlohmann::ordered_json();
  j["gated"] = c.gated;
  j["incorrect_gated"] = c.incorrect_gated;
  return j;
}

inline nlohmann::ordered_json to_json(const TrainingReport& r) {
  nlohmann::ordered_json j;
  j["split"] = {{"train", r.train_size}, {"validation", r.validation_size}, {"test", r.test_size}};
  j["members"] = nlohmann::ordered_json::array();
  for (const auto& m : r.members) {
    j["members"].push_back({{"seed", m.seed},
                            {"train_size", m.train_size},
                            {"train_accuracy", m.train_accuracy},
                            {"val_accuracy", m.val_accuracy},
                            {"test_accuracy", m.test_accuracy}});
  }
  j["mean_member_train_accuracy"] = r.mean_member_train_accuracy;
  j["mean_member_test_accuracy"] = r.mean_member_test_accuracy;
  j["ensemble_val_accuracy"] = r.ensemble_val_accuracy;
  j["ensemble_test_accuracy"] = r.ensemble_test_accuracy;
  j["confidence"] = to_json(r.confidence);
  return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw invalid_argument("cannot write " + path.string());
}

/// Writes member_<i>.mlp, norm.json, manifest.json and report.json into `dir`.
inline EnsembleManifest write_ensemble(const TrainedEnsemble& e, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw invalid_argument("cannot create directory " + dir.string() + ": " + ec.message());
  EnsembleManifest m;
  m.distribution = e.spec.distribution;
  m.data_seed = e.spec.data_seed;
  m.norm = "norm.json";
  write_text(dir / m.norm, to_json(e.norm).dump(2) + "\n");
  for (std::size_t i = 0; i < e.models.size(); ++i) {
    const std::string name = "member_" + std::to_string(i) + ".mlp";
    save_model(e.models[i], (dir / name).string());
    m.members.push_back({name, e.spec.member_seeds[i], e.report.members[i].train_size});
  }
  write_text(dir / "manifest.json", to_json(m).dump(2) + "\n");
  write_text(dir / "report.json", to_json(e.report).dump(2) + "\n");
  return m;
}

}  // namespace fogdx
