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
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fogdx/error.hpp"
#include "fogdx/heartdata.hpp"
#include "fogdx/random.hpp"

namespace fogdx {

/// 13 inputs, three ReLU hidden layers, 2-way softmax.
inline const std::vector<std::size_t> kArchitecture = {13, 20, 20, 10, 2};

inline constexpr int kModelFileVersion = 1;

/// Fully connected layer; `weights` is row-major with one row per output unit.
struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  double& w(std::size_t out, std::size_t in) { return weights[out * inputs + in]; }
  double w(std::size_t out, std::size_t in) const { return weights[out * inputs + in]; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

class MlpModel {
 public:
  MlpModel() = default;

  /// All-zero parameters with the given layer sizes.
  explicit MlpModel(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    if (dims_.size() < 2 || dims_.front() != kNumFeatures || dims_.back() != 2) {
      throw invalid_argument("MlpModel: dims must start at 13 inputs and end at 2 outputs");
    }
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
      if (dims_[l] == 0 || dims_[l + 1] == 0) throw invalid_argument("MlpModel: zero-width layer");
      layers_.push_back({dims_[l], dims_[l + 1], std::vector<double>(dims_[l] * dims_[l + 1], 0.0),
                         std::vector<double>(dims_[l + 1], 0.0)});
    }
  }

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::span<DenseLayer> layers() { return layers_; }
  std::span<const DenseLayer> layers() const { return layers_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
  }

  /// Flat parameter order: per layer, weights row-major then biases. This is
  /// also the order of values in the model file.
  double& parameter(std::size_t index) { return locate(*this, index); }
  double parameter(std::size_t index) const { return locate(const_cast<MlpModel&>(*this), index); }

  template <class F>
  void for_each_parameter(F&& f) const {
    for (const auto& l : layers_) {
      for (double v : l.weights) f(v);
      for (double v : l.bias) f(v);
    }
  }

  friend bool operator==(const MlpModel&, const MlpModel&) = default;

 private:
  static double& locate(MlpModel& m, std::size_t index) {
    for (auto& l : m.layers_) {
      if (index < l.weights.size()) return l.weights[index];
      index -= l.weights.size();
      if (index < l.bias.size()) return l.bias[index];
      index -= l.bias.size();
    }
    throw invalid_argument("MlpModel: parameter index out of range");
  }

  std::vector<std::size_t> dims_;
  std::vector<DenseLayer> layers_;
};

struct Probabilities {
  double p0 = 0.5;
  double p1 = 0.5;

  friend bool operator==(const Probabilities&, const Probabilities&) = default;
};

struct Example {
  FeatureVector x{};
  int y = 0;
};

inline std::vector<Example> make_examples(std::span<const PatientRecord> records, const NormStats& stats) {
  std::vector<Example> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (!r.label) throw invalid_argument("make_examples: record without label");
    out.push_back({normalize(r, stats), *r.label});
  }
  return out;
}

/// Glorot-uniform weights, zero biases.
inline MlpModel init_model(std::uint64_t seed, const std::vector<std::size_t>& dims = kArchitecture) {
  MlpModel m(dims);
  Rng rng(seed);
  for (auto& l : m.layers()) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.inputs + l.outputs));
    for (double& w : l.weights) w = uniform(rng, -limit, limit);
  }
  return m;
}

namespace detail {

/// Per-layer activations of one forward pass. `acts[0]` is the input,
/// `acts[l+1]` the post-activation output of layer l; `logits` is the raw
/// output-layer value before softmax.
struct ForwardTrace {
  std::vector<std::vector<double>> acts;
  std::vector<double> logits;
  std::vector<double> probs;
};

inline void softmax(std::span<const double> z, std::vector<double>& out) {
  const double zmax = *std::max_element(z.begin(), z.end());
  out.resize(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - zmax);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
}

inline void forward(const MlpModel& m, std::span<const double> x, ForwardTrace& t) {
  const auto layers = m.layers();
  t.acts.resize(layers.size() + 1);
  t.acts[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const auto& in = t.acts[l];
    auto& out = t.acts[l + 1];
    out.assign(layer.outputs, 0.0);
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      double z = layer.bias[o];
      const double* row = &layer.weights[o * layer.inputs];
      for (std::size_t i = 0; i < layer.inputs; ++i) z += row[i] * in[i];
      out[o] = z;
    }
    if (l + 1 < layers.size()) {
      for (double& v : out) v = std::max(v, 0.0);
    }
  }
  t.logits = t.acts.back();
  softmax(t.logits, t.probs);
}

/// -log softmax(z)[y], evaluated as logsumexp(z) - z[y].
inline double cross_entropy(std::span<const double> logits, int y) {
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - zmax);
  return zmax + std::log(sum) - logits[static_cast<std::size_t>(y)];
}

inline void check_finite_input(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) throw invalid_argument("predict_proba: non-finite input");
  }
}

}  // namespace detail

inline Probabilities predict_proba(const MlpModel& model, std::span<const double> x) {
  if (x.size() != model.dims().front()) throw invalid_argument("predict_proba: input has wrong width");
  detail::check_finite_input(x);
  detail::ForwardTrace t;
  detail::forward(model, x, t);
  return {t.probs[0], t.probs[1]};
}

inline Probabilities predict_proba(const MlpModel& model, const FeatureVector& x) {
  return predict_proba(model, std::span<const double>(x));
}

/// Argmax with ties resolved toward class 1.
inline int predicted_class(const Probabilities& p) { return p.p1 >= p.p0 ? 1 : 0; }

/// Mean cross-entropy over `batch`. When `grad` is non-null it receives
/// d(loss)/d(parameter) with the model's shape.
inline double loss_and_gradient(const MlpModel& model, std::span<const Example> batch, MlpModel* grad) {
  if (batch.empty()) throw invalid_argument("loss_and_gradient: empty batch");
  const auto layers = model.layers();
  if (grad) *grad = MlpModel(model.dims());
  const double scale = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  detail::ForwardTrace t;
  std::vector<double> delta, prev_delta;
  for (const auto& ex : batch) {
    detail::forward(model, ex.x, t);
    loss += detail::cross_entropy(t.logits, ex.y);
    if (!grad) continue;
    // d(CE)/d(logits) = softmax - onehot
    delta = t.probs;
    delta[static_cast<std::size_t>(ex.y)] -= 1.0;
    for (double& d : delta) d *= scale;
    for (std::size_t l = layers.size(); l-- > 0;) {
      const auto& layer = layers[l];
      auto& g = grad->layers()[l];
      const auto& in = t.acts[l];
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        g.bias[o] += delta[o];
        double* grow = &g.weights[o * layer.inputs];
        for (std::size_t i = 0; i < layer.inputs; ++i) grow[i] += delta[o] * in[i];
      }
      if (l == 0) break;
      prev_delta.assign(layer.inputs, 0.0);
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        const double* row = &layer.weights[o * layer.inputs];
        for (std::size_t i = 0; i < layer.inputs; ++i) prev_delta[i] += row[i] * delta[o];
      }
      // ReLU derivative, taken as 0 at the kink.
      for (std::size_t i = 0; i < layer.inputs; ++i) {
        if (!(in[i] > 0.0)) prev_delta[i] = 0.0;
      }
      std::swap(delta, prev_delta);
    }
  }
  return loss * scale;
}

inline double accuracy(const MlpModel& model, std::span<const Example> examples) {
  if (examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : examples) correct += predicted_class(predict_proba(model, ex.x)) == ex.y ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

struct TrainConfig {
  double learning_rate = 1e-4;
  int epochs = 300;
  int batch_size = 8;
  std::uint64_t seed = 42;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
      throw invalid_argument("TrainConfig: learning_rate must be finite and >= 0");
    }
    if (epochs < 1) throw invalid_argument("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw invalid_argument("TrainConfig: batch_size must be >= 1");
  }
};

struct TrainHistory {
  std::vector<double> loss;            // mean minibatch loss per epoch
  std::vector<double> train_accuracy;  // full pass after each epoch
  std::vector<double> val_accuracy;    // empty when no validation set
};

struct TrainResult {
  MlpModel model;
  TrainHistory history;
};

class AdamOptimizer {
 public:
  AdamOptimizer(const MlpModel& shape, const TrainConfig& cfg)
      : cfg_(cfg), m_(shape.parameter_count(), 0.0), v_(shape.parameter_count(), 0.0) {}

  void step(MlpModel& model, const MlpModel& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.adam_beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.adam_beta2, static_cast<double>(t_));
    std::size_t k = 0;
    auto layers = model.layers();
    const auto glayers = grad.layers();
    auto update = [&](double& p, double g) {
      m_[k] = cfg_.adam_beta1 * m_[k] + (1.0 - cfg_.adam_beta1) * g;
      v_[k] = cfg_.adam_beta2 * v_[k] + (1.0 - cfg_.adam_beta2) * g * g;
      p -= cfg_.learning_rate * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + cfg_.adam_eps);
      ++k;
    };
    for (std::size_t l = 0; l < layers.size(); ++l) {
      for (std::size_t i = 0; i < layers[l].weights.size(); ++i) update(layers[l].weights[i], glayers[l].weights[i]);
      for (std::size_t i = 0; i < layers[l].bias.size(); ++i) update(layers[l].bias[i], glayers[l].bias[i]);
    }
  }

 private:
  TrainConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t t_ = 0;
};

/// Minibatch Adam on mean cross-entropy. The epoch shuffle is drawn from
/// `cfg.seed`, so equal inputs give bit-identical models.
inline TrainResult train(MlpModel model, std::span<const Example> train_set, std::span<const Example> val_set,
                         const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty()) throw invalid_argument("train: empty training set");
  Rng rng(derive_seed(cfg.seed, 0x7261696e));
  AdamOptimizer opt(model, cfg);
  TrainResult result;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Example> batch;
  MlpModel grad;
  const auto bs = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(std::span(order), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(train_set[order[k]]);
      const double loss = loss_and_gradient(model, batch, &grad);
      if (!std::isfinite(loss)) {
        throw internal_error("train: loss became " + std::string(std::isnan(loss) ? "NaN" : "infinite") +
                             " at epoch " + std::to_string(epoch));
      }
      loss_sum += loss * static_cast<double>(end - start);
      opt.step(model, grad);
    }
    result.history.loss.push_back(loss_sum / static_cast<double>(order.size()));
    result.history.train_accuracy.push_back(accuracy(model, train_set));
    if (!val_set.empty()) result.history.val_accuracy.push_back(accuracy(model, val_set));
  }
  result.model = std::move(model);
  return result;
}

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t worst_index = 0;
};

/// |a - n| / max(|a|, |n|, 1e-8)
inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

/// Compares `analytic` against central differences of the batch loss on
/// `samples` randomly chosen parameters (all of them if fewer exist).
inline GradientCheckResult compare_gradients(const MlpModel& model, std::span<const Example> batch,
                                             const MlpModel& analytic, std::uint64_t seed, std::size_t samples = 100,
                                             double h = 1e-5) {
  if (batch.empty()) throw invalid_argument("gradient_check: empty batch");
  const std::size_t n = model.parameter_count();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(std::span(idx), rng);
  idx.resize(std::min(samples, n));

  GradientCheckResult res;
  MlpModel probe = model;
  for (std::size_t i : idx) {
    const double orig = probe.parameter(i);
    probe.parameter(i) = orig + h;
    const double up = loss_and_gradient(probe, batch, nullptr);
    probe.parameter(i) = orig - h;
    const double down = loss_and_gradient(probe, batch, nullptr);
    probe.parameter(i) = orig;
    const double err = relative_error(analytic.parameter(i), (up - down) / (2.0 * h));
    if (err > res.max_relative_error || res.checked == 0) {
      res.max_relative_error = err;
      res.worst_index = i;
    }
    ++res.checked;
  }
  return res;
}

inline GradientCheckResult gradient_check(const MlpModel& model, std::span<const Example> batch, std::uint64_t seed,
                                          std::size_t samples = 100) {
  MlpModel grad;
  loss_and_gradient(model, batch, &grad);
  return compare_gradients(model, batch, grad, seed, samples);
}

// Model file:
//   fogdx-mlp <version>
//   dims 13 20 20 10 2
//   <one parameter per line, flat parameter order>
//   end

inline std::string dims_to_string(const std::vector<std::size_t>& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
  return s + "]";
}

inline std::string model_to_text(const MlpModel& m) {
  std::string out = "fogdx-mlp " + std::to_string(kModelFileVersion) + "\ndims";
  for (auto d : m.dims()) out += " " + std::to_string(d);
  out += '\n';
  m.for_each_parameter([&](double v) {
    out += detail::format_number(v);
    out += '\n';
  });
  out += "end\n";
  return out;
}

inline MlpModel model_from_text(std::string_view text, const std::vector<std::size_t>& expected = kArchitecture) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(detail::trim(text.substr(pos, end - pos)));
    pos = end + 1;
  }
  std::size_t cur = 0;
  auto next = [&]() -> std::string_view {
    if (cur >= lines.size()) throw ParseError("unexpected end of model file");
    return lines[cur++];
  };

  const auto magic = detail::split(next(), ' ');
  if (magic.size() != 2 || magic[0] != "fogdx-mlp") throw ParseError("not a fogdx model file");
  if (magic[1] != std::to_string(kModelFileVersion)) {
    throw ParseError("unsupported model file version " + std::string(magic[1]) + " (expected " +
                     std::to_string(kModelFileVersion) + ")");
  }
  const auto dim_fields = detail::split(next(), ' ');
  std::vector<std::size_t> dims;
  if (dim_fields.empty() || dim_fields[0] != "dims") throw ParseError("model file: missing dims line");
  for (std::size_t i = 1; i < dim_fields.size(); ++i) {
    const auto v = detail::parse_number(dim_fields[i]);
    if (!v || *v < 0 || *v != std::floor(*v)) throw ParseError("model file: bad dims entry");
    dims.push_back(static_cast<std::size_t>(*v));
  }
  if (dims != expected) {
    throw ParseError("model dims " + dims_to_string(dims) + " do not match expected " + dims_to_string(expected));
  }
  MlpModel m(dims);
  for (std::size_t i = 0; i < m.parameter_count(); ++i) {
    const auto line = next();
    if (line == "end") throw ParseError("unexpected end of model file");
    const auto v = detail::parse_number(line);
    if (!v) throw ParseError("model file line " + std::to_string(cur) + ": not a number");
    m.parameter(i) = *v;
  }
  if (next() != "end") throw ParseError("model file: trailing data after parameters");
  return m;
}

inline void save_model(const MlpModel& m, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw invalid_argument("cannot write model file " + path);
  f << model_to_text(m);
  if (!f) throw invalid_argument("error writing model file " + path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw invalid_argument("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline MlpModel load_model(const std::string& path) { return model_from_text(read_file(path)); }

}  // namespace fogdx
