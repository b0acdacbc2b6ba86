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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fogdx/neuralnet.hpp"
#include "fogdx/pipeline.hpp"
#include "fogdx/worker.hpp"
#include "test_util.hpp"

using namespace fogdx;

namespace {

// Straightforward reference forward pass, written independently of the
// library's buffers.
Probabilities reference_proba(const MlpModel& m, const FeatureVector& x) {
  std::vector<double> a(x.begin(), x.end());
  const auto layers = m.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& L = layers[l];
    std::vector<double> z(L.outputs);
    for (std::size_t o = 0; o < L.outputs; ++o) {
      double s = L.bias[o];
      for (std::size_t i = 0; i < L.inputs; ++i) s += L.weights[o * L.inputs + i] * a[i];
      z[o] = (l + 1 < layers.size()) ? std::max(0.0, s) : s;
    }
    a = z;
  }
  const double mx = std::max(a[0], a[1]);
  const double e0 = std::exp(a[0] - mx), e1 = std::exp(a[1] - mx);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

MlpModel random_model(std::uint64_t seed, double scale = 1.0) {
  auto m = init_model(seed);
  std::mt19937_64 g(seed ^ 0xabcdef);
  std::normal_distribution<double> n(0.0, 0.1 * scale);
  for (std::size_t i = 0; i < m.parameter_count(); ++i) m.parameter(i) += n(g);
  return m;
}

}  // namespace

TEST(InitModel, ShapesFollowArchitecture) {
  const auto m = init_model(0);
  const auto layers = m.layers();
  ASSERT_EQ(layers.size(), 4u);
  const std::size_t want[4][2] = {{20, 13}, {20, 20}, {10, 20}, {2, 10}};
  std::size_t total = 0;
  for (std::size_t l = 0; l < 4; ++l) {
    EXPECT_EQ(layers[l].outputs, want[l][0]);
    EXPECT_EQ(layers[l].inputs, want[l][1]);
    total += want[l][0] * want[l][1] + want[l][0];
  }
  EXPECT_EQ(m.parameter_count(), total);
}

TEST(InitModel, SeedZeroBiasesAreZeroAndWeightsInGlorotRange) {
  const auto m = init_model(0);
  for (const auto& l : m.layers()) {
    for (double b : l.bias) EXPECT_EQ(b, 0.0);
    const double limit = std::sqrt(6.0 / static_cast<double>(l.inputs + l.outputs));
    for (double w : l.weights) {
      EXPECT_GE(w, -limit);
      EXPECT_LE(w, limit);
    }
  }
}

TEST(InitModel, Deterministic) {
  EXPECT_EQ(init_model(17), init_model(17));
  EXPECT_NE(init_model(17), init_model(18));
}

TEST(PredictProba, ZeroModelIsUniform) {
  const MlpModel zero(kArchitecture);
  const auto p = predict_proba(zero, FeatureVector{0.3, 1, 0.2, 0.9, 0.1, 0, 1, 0.5, 0, 0.7, 0.5, 0.25, 0.66});
  EXPECT_EQ(p.p0, 0.5);
  EXPECT_EQ(p.p1, 0.5);
  EXPECT_EQ(predicted_class(p), 1);
}

TEST(PredictProba, MatchesReferenceAndSumsToOne) {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u(-2.0, 3.0);
  for (int c = 0; c < 1000; ++c) {
    const auto m = random_model(static_cast<std::uint64_t>(c % 50), 1.0 + c % 7);
    FeatureVector x;
    for (auto& v : x) v = u(g);
    const auto p = predict_proba(m, x);
    const auto ref = reference_proba(m, x);
    ASSERT_NEAR(p.p0 + p.p1, 1.0, 1e-9);
    ASSERT_GE(p.p0, 0.0);
    ASSERT_GE(p.p1, 0.0);
    ASSERT_NEAR(p.p0, ref.p0, 1e-12);
  }
}

TEST(PredictProba, ExtremeLogitsStayFinite) {
  auto m = init_model(1);
  for (auto& b : m.layers().back().bias) b = 0;
  m.layers().back().bias[0] = 1e4;
  const auto p = predict_proba(m, FeatureVector{});
  EXPECT_EQ(p.p0, 1.0);
  EXPECT_EQ(p.p1, 0.0);
}

TEST(PredictProba, NonFiniteInputRejected) {
  auto x = FeatureVector{};
  x[4] = std::nan("");
  EXPECT_THROW(predict_proba(init_model(1), x), Error);
  x[4] = INFINITY;
  EXPECT_THROW(predict_proba(init_model(1), x), Error);
}

TEST(Loss, ZeroModelIsLogTwo) {
  const MlpModel zero(kArchitecture);
  const auto batch = test::random_examples(5, 1);
  MlpModel grad;
  EXPECT_NEAR(loss_and_gradient(zero, batch, &grad), std::log(2.0), 1e-15);
}

TEST(GradientCheck, TenRandomBatches) {
  for (std::uint64_t b = 0; b < 10; ++b) {
    const auto model = random_model(100 + b);
    const auto batch = test::random_examples(4 + b, 200 + b);
    const auto r = gradient_check(model, batch, 300 + b, 100);
    EXPECT_EQ(r.checked, 100u);
    EXPECT_LT(r.max_relative_error, 1e-4) << "batch " << b << " worst parameter " << r.worst_index;
  }
}

TEST(GradientCheck, CorruptedGradientIsCaught) {
  const auto model = random_model(5);
  const auto batch = test::random_examples(8, 6);
  MlpModel grad;
  loss_and_gradient(model, batch, &grad);
  for (std::size_t i = 0; i < grad.parameter_count(); ++i) grad.parameter(i) *= 1.5;
  EXPECT_GT(compare_gradients(model, batch, grad, 7, grad.parameter_count()).max_relative_error, 1e-2);
}

TEST(GradientCheck, RelativeErrorGuard) {
  EXPECT_EQ(relative_error(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(1e-12, 0.0), 1e-12 / 1e-8);
  EXPECT_DOUBLE_EQ(relative_error(2.0, 1.0), 0.5);
}

TEST(Train, MemorizesRepeatedPoint) {
  std::vector<Example> one(4, Example{FeatureVector{0.1, 1, 0.3, 0.5, 0.5, 0, 1, 0.2, 1, 0.9, 0.5, 0.75, 1}, 1});
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.learning_rate = 1e-3;
  const auto r = train(init_model(2), one, {}, cfg);
  EXPECT_EQ(accuracy(r.model, one), 1.0);
  EXPECT_EQ(r.history.loss.size(), 200u);
  EXPECT_EQ(r.history.train_accuracy.size(), 200u);
  EXPECT_LT(r.history.loss.back(), r.history.loss.front());
}

TEST(Train, ZeroLearningRateIsIdentity) {
  const auto start = init_model(3);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.learning_rate = 0.0;
  EXPECT_EQ(train(start, test::random_examples(30, 4), {}, cfg).model, start);
}

TEST(Train, Deterministic) {
  TrainConfig cfg;
  cfg.epochs = 10;
  const auto data = test::random_examples(40, 9);
  EXPECT_EQ(train(init_model(5), data, {}, cfg).model, train(init_model(5), data, {}, cfg).model);
}

TEST(Train, Errors) {
  TrainConfig cfg;
  EXPECT_THROW(train(init_model(1), {}, {}, cfg), Error);
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.learning_rate = -1;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Train, NanLossNamesEpoch) {
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.learning_rate = 1e300;
  try {
    train(random_model(1, 50), test::random_examples(16, 2), {}, cfg);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos) << e.what();
  }
}

TEST(ModelFile, RoundTrip) {
  const auto m = random_model(11);
  const auto back = model_from_text(model_to_text(m));
  EXPECT_EQ(back, m);
  const auto x = FeatureVector{0.2, 1, 0.1, 0.7, 0.3, 0, 1, 0.9, 0, 0.4, 0.5, 0, 0.33};
  EXPECT_NEAR(predict_proba(back, x).p1, predict_proba(m, x).p1, 1e-12);

  const auto dir = test::temp_dir("model_file");
  save_model(m, (dir / "m.mlp").string());
  EXPECT_EQ(load_model((dir / "m.mlp").string()), m);
}

TEST(ModelFile, Header) {
  const auto text = model_to_text(init_model(1));
  EXPECT_EQ(text.rfind("fogdx-mlp 1\ndims 13 20 20 10 2\n", 0), 0u);
}

TEST(ModelFile, Truncated) {
  auto text = model_to_text(init_model(1));
  text.resize(text.size() / 2);
  text.resize(text.rfind('\n') + 1);
  try {
    model_from_text(text);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "unexpected end of model file");
  }
}

TEST(ModelFile, WrongDimsNamesExpected) {
  auto text = model_to_text(init_model(1));
  text.replace(text.find("dims 13 20 20 10 2"), 18, "dims 13 20 20 11 2");
  try {
    model_from_text(text);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("[13,20,20,10,2]"), std::string::npos) << e.what();
  }
}

TEST(ModelFile, WrongVersion) {
  auto text = model_to_text(init_model(1));
  text.replace(0, 11, "fogdx-mlp 9");
  EXPECT_THROW(model_from_text(text), Error);
}

// Pinned from the first seeded run (split seed 1, member seed 42, 300 epochs).
TEST(Golden, ClevelandSingleModel) {
  const auto trained = train_pipeline(test::cleveland(), {});
  EXPECT_NEAR(trained.report.ensemble_test_accuracy, 53.0 / 61.0, 0.02);
  const WorkerModel w{trained.models.front(), trained.norm};
  const auto r = w.predict(parse_payload("63,1,3,145,233,1,0,150,0,2.3,0,0,1"));
  EXPECT_NEAR(r.p0, 0.820106366, 1e-6);
  EXPECT_EQ(r.cls, 0);
}
