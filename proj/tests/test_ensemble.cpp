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

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "fogdx/ensemble.hpp"
#include "fogdx/pipeline.hpp"
#include "test_util.hpp"

using namespace fogdx;

namespace {

std::vector<int> ids(std::size_t n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

Probabilities random_probs(std::mt19937_64& g) {
  const double p = std::uniform_real_distribution<double>(0.0, 1.0)(g);
  return {1.0 - p, p};
}

}  // namespace

TEST(DistributeData, EqualShardsOf1355) {
  const auto data = ids(1355);
  const auto shards = distribute_data(std::span<const int>(data), make_ensemble_spec(5, Distribution::EqualPartition, 1));
  ASSERT_EQ(shards.size(), 5u);
  std::multiset<int> seen;
  for (const auto& s : shards) {
    EXPECT_EQ(s.size(), 271u);
    seen.insert(s.begin(), s.end());
  }
  EXPECT_EQ(seen, std::multiset<int>(data.begin(), data.end()));
}

TEST(DistributeData, UnevenSizesDifferByAtMostOne) {
  const auto data = ids(207);
  for (std::size_t n = 1; n <= 9; ++n) {
    const auto shards = distribute_data(std::span<const int>(data), make_ensemble_spec(n, Distribution::EqualPartition, 3));
    std::size_t lo = data.size(), hi = 0, total = 0;
    for (const auto& s : shards) {
      lo = std::min(lo, s.size());
      hi = std::max(hi, s.size());
      total += s.size();
    }
    EXPECT_LE(hi - lo, 1u);
    EXPECT_EQ(total, data.size());
  }
}

TEST(DistributeData, SingleMemberGetsSetUnchanged) {
  const auto data = ids(50);
  const auto shards = distribute_data(std::span<const int>(data), make_ensemble_spec(1, Distribution::EqualPartition, 9));
  EXPECT_EQ(shards.front(), data);
}

TEST(DistributeData, BootstrapDistinctFraction) {
  const auto data = ids(100);
  const auto shards = distribute_data(std::span<const int>(data), make_ensemble_spec(3, Distribution::Bootstrap, 11));
  const double expected = 1.0 - std::pow(1.0 - 1.0 / 100.0, 100.0);  // ~0.634
  double mean = 0.0;
  for (const auto& s : shards) {
    EXPECT_EQ(s.size(), 100u);
    const double distinct = static_cast<double>(std::set<int>(s.begin(), s.end()).size()) / 100.0;
    EXPECT_NEAR(distinct, expected, 0.15);  // one draw: sd is about 0.03
    mean += distinct / 3.0;
  }
  EXPECT_NEAR(mean, expected, 0.05);
  EXPECT_NE(shards[0], shards[1]);
}

TEST(DistributeData, MoreMembersThanRecords) {
  const auto data = ids(3);
  EXPECT_THROW(distribute_data(std::span<const int>(data), make_ensemble_spec(4, Distribution::EqualPartition, 1)),
               Error);
}

TEST(EnsembleSpec, SeedsDistinctAndCounted) {
  const auto spec = make_ensemble_spec(5, Distribution::Bootstrap, 42);
  EXPECT_EQ(spec.member_seeds.size(), 5u);
  EXPECT_EQ(std::set(spec.member_seeds.begin(), spec.member_seeds.end()).size(), 5u);
  auto bad = spec;
  bad.member_seeds[1] = bad.member_seeds[0];
  EXPECT_THROW(bad.validate(), Error);
  bad = spec;
  bad.member_seeds.pop_back();
  EXPECT_THROW(bad.validate(), Error);
}

TEST(TrainEnsemble, SingleMemberEqualsPlainTrain) {
  const auto data = test::random_examples(60, 1);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 77;
  const auto spec = make_ensemble_spec(1, Distribution::EqualPartition, 77);
  EXPECT_EQ(train_ensemble(data, {}, spec, cfg).front().model, train(init_model(77), data, {}, cfg).model);
}

TEST(TrainEnsemble, MembersDistinctAndParallelMatchesSerial) {
  const auto data = test::random_examples(100, 2);
  TrainConfig cfg;
  cfg.epochs = 3;
  const auto spec = make_ensemble_spec(5, Distribution::EqualPartition, 5);
  const auto par = train_ensemble(data, {}, spec, cfg, true);
  const auto ser = train_ensemble(data, {}, spec, cfg, false);
  ASSERT_EQ(par.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(par[i].model, ser[i].model);
    for (std::size_t j = 0; j < i; ++j) EXPECT_NE(par[i].model, par[j].model);
  }
}

TEST(TrainEnsemble, ErrorsNameMember) {
  auto spec = make_ensemble_spec(2, Distribution::EqualPartition, 5);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.learning_rate = 1e300;
  std::vector<Example> data(8);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i].x.fill(1e3);
    data[i].y = static_cast<int>(i % 2);
  }
  try {
    train_ensemble(data, {}, spec, cfg, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("ensemble member 0: ", 0), 0u) << e.what();
  }
}

TEST(Vote, Examples) {
  const std::vector<Probabilities> a = {{0.3, 0.7}, {0.2, 0.8}, {0.6, 0.4}};
  EXPECT_EQ(vote(a).cls, 1);
  EXPECT_EQ(vote(a).member_votes, (std::vector<int>{1, 1, 0}));
  const std::vector<Probabilities> tie = {{0.1, 0.9}, {0.9, 0.1}};
  EXPECT_EQ(vote(tie).cls, 1);
  const std::vector<Probabilities> c = {{0.9, 0.1}, {0.8, 0.2}, {0.2, 0.8}};
  const auto r = vote(c);
  EXPECT_EQ(r.cls, 0);
  EXPECT_EQ(r.member_votes, (std::vector<int>{0, 0, 1}));
  EXPECT_NEAR(r.p0, 1.9 / 3.0, 1e-12);
  EXPECT_NEAR(r.p1, 1.1 / 3.0, 1e-12);
  EXPECT_NEAR(r.confidence, 100.0 * (2.0 * 1.9 / 3.0 - 1.0), 1e-9);
  EXPECT_THROW(vote(std::vector<Probabilities>{}), Error);
  const std::vector<Probabilities> even = {{0.5, 0.5}};
  EXPECT_EQ(vote(even).cls, 1);
}

TEST(Vote, PermutationInvariant) {
  std::mt19937_64 g(4);
  for (int t = 0; t < 500; ++t) {
    std::vector<Probabilities> m(1 + g() % 7);
    for (auto& p : m) p = random_probs(g);
    const auto base = vote(m);
    std::shuffle(m.begin(), m.end(), g);
    const auto perm = vote(m);
    EXPECT_EQ(perm.cls, base.cls);
    EXPECT_NEAR(perm.p0, base.p0, 1e-12);
    EXPECT_NEAR(perm.confidence, base.confidence, 1e-9);
    auto a = base.member_votes, b = perm.member_votes;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
  }
}

TEST(Vote, IdenticalMembersMatchSingle) {
  std::mt19937_64 g(8);
  for (int t = 0; t < 200; ++t) {
    const auto p = random_probs(g);
    const auto single = make_result(p);
    const std::vector<Probabilities> m(1 + t % 5, p);
    const auto r = vote(m);
    EXPECT_EQ(r.cls, single.cls);
    EXPECT_NEAR(r.p0, p.p0, 1e-12);
    EXPECT_NEAR(r.confidence, single.confidence, 1e-9);
  }
}

TEST(Vote, AccuracyMatchesBruteForceRecount) {
  const auto data = test::random_examples(200, 21);
  TrainConfig cfg;
  cfg.epochs = 4;
  std::vector<MlpModel> models;
  for (auto& r : train_ensemble(data, {}, make_ensemble_spec(4, Distribution::Bootstrap, 3), cfg)) {
    models.push_back(r.model);
  }
  std::size_t correct = 0;
  for (const auto& ex : data) {
    int ones = 0;
    for (const auto& m : models) {
      const auto p = predict_proba(m, ex.x);
      ones += p.p1 >= p.p0 ? 1 : 0;
    }
    const int label = 2 * ones >= static_cast<int>(models.size()) ? 1 : 0;
    correct += label == ex.y ? 1 : 0;
  }
  EXPECT_DOUBLE_EQ(ensemble_accuracy(models, data), static_cast<double>(correct) / 200.0);
}

TEST(Confidence, Examples) {
  EXPECT_NEAR(confidence(0.5, 0.5), 0.0, 1e-9);
  EXPECT_NEAR(confidence(0.9, 0.1), 80.0, 1e-9);
  EXPECT_NEAR(confidence(0.7485, 0.2515), 49.7, 1e-9);
  EXPECT_NEAR(confidence(0.0, 1.0), 100.0, 1e-9);
}

TEST(Confidence, InvalidInputs) {
  EXPECT_THROW(confidence(0.6, 0.6), Error);
  EXPECT_THROW(confidence(-0.1, 1.1), Error);
  EXPECT_THROW(confidence(std::nan(""), 0.5), Error);
}

TEST(Confidence, MonotoneAndBounded) {
  double prev = -1.0;
  for (int i = 0; i <= 1000; ++i) {
    const double m = 0.5 + 0.5 * i / 1000.0;
    const double c = confidence(m, 1.0 - m);
    EXPECT_GE(c, prev);
    EXPECT_GE(c, 0.0);
    EXPECT_LE(c, 100.0);
    prev = c;
  }
}

TEST(Gate, Threshold) {
  PredictionResult r;
  r.confidence = 49.7;
  EXPECT_EQ(gate(r), Gate::ConsultDoctor);
  r.confidence = 80.0;
  EXPECT_EQ(gate(r), Gate::Reliable);
  r.confidence = 50.0;
  EXPECT_EQ(gate(r), Gate::Reliable);
  r.confidence = std::nextafter(50.0, 0.0);
  EXPECT_EQ(gate(r), Gate::ConsultDoctor);
  EXPECT_EQ(parse_gate(to_string(Gate::ConsultDoctor)), Gate::ConsultDoctor);
}

TEST(MakeResult, ArgmaxUnderRescaling) {
  std::mt19937_64 g(12);
  std::uniform_real_distribution<double> k(0.01, 100.0);
  for (int t = 0; t < 500; ++t) {
    const auto p = random_probs(g);
    const double s = k(g);
    const double a = p.p0 * s, b = p.p1 * s;
    EXPECT_EQ(make_result({a / (a + b), b / (a + b)}).cls, make_result(p).cls);
  }
}

TEST(Manifest, WriteAndLoad) {
  PipelineOptions opts;
  opts.members = 3;
  opts.train.epochs = 3;
  const auto trained = train_pipeline(test::cleveland(), opts);
  const auto dir = test::temp_dir("manifest");
  const auto m = write_ensemble(trained, dir);
  EXPECT_EQ(manifest_from_json(nlohmann::json::parse(to_json(m).dump())), m);
  const auto loaded = load_ensemble((dir / "manifest.json").string());
  EXPECT_EQ(loaded.manifest, m);
  EXPECT_EQ(loaded.norm, trained.norm);
  ASSERT_EQ(loaded.models.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(loaded.models[i], trained.models[i]);
  std::size_t total = 0;
  for (const auto& mem : m.members) total += mem.train_size;
  EXPECT_EQ(total, trained.report.train_size);
}

TEST(Manifest, BadVersion) {
  auto j = nlohmann::json::parse(R"({"version":2,"distribution":"equal","data_seed":1,"norm":"n","members":[]})");
  EXPECT_THROW(manifest_from_json(j), Error);
}

TEST(ConfidenceReport, CountsWrongPredictions) {
  const auto trained = train_pipeline(test::cleveland(), {});
  const auto& c = trained.report.confidence;
  EXPECT_EQ(c.predictions, trained.report.test_size);
  EXPECT_EQ(static_cast<double>(c.predictions - c.incorrect) / static_cast<double>(c.predictions),
            trained.report.ensemble_test_accuracy);
  ASSERT_TRUE(c.max_incorrect_confidence.has_value());
  EXPECT_LE(c.incorrect_gated, c.incorrect);
}
