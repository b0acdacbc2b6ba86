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
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fogdx/error.hpp"
#include "fogdx/random.hpp"

namespace fogdx {

inline constexpr std::size_t kNumFeatures = 13;

/// Column order of the heart-disease table. The optional 14th column is the label.
enum class Feature : std::size_t {
  Age,
  Sex,
  ChestPain,
  RestingBp,
  Cholesterol,
  FastingBloodSugar,
  RestEcg,
  MaxHeartRate,
  ExerciseAngina,
  StDepression,
  Slope,
  Vessels,
  Thal,
};

inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "age", "sex", "cp", "trestbps", "chol", "fbs", "restecg", "thalach", "exang", "oldpeak", "slope", "ca", "thal"};

/// Inclusive integer domain for the categorical columns; continuous columns have none.
struct CategoricalRange {
  int lo = 0;
  int hi = 0;
};

inline constexpr std::array<std::optional<CategoricalRange>, kNumFeatures> kCategoricalRanges = {
    std::nullopt,            // age
    CategoricalRange{0, 1},  // sex
    CategoricalRange{0, 3},  // cp
    std::nullopt,            // trestbps
    std::nullopt,            // chol
    CategoricalRange{0, 1},  // fbs
    CategoricalRange{0, 2},  // restecg
    std::nullopt,            // thalach
    CategoricalRange{0, 1},  // exang
    std::nullopt,            // oldpeak
    CategoricalRange{0, 2},  // slope
    CategoricalRange{0, 4},  // ca
    CategoricalRange{0, 3},  // thal
};

using FeatureVector = std::array<double, kNumFeatures>;

struct PatientRecord {
  FeatureVector features{};
  std::optional<int> label;

  double operator[](Feature f) const { return features[static_cast<std::size_t>(f)]; }
  double& operator[](Feature f) { return features[static_cast<std::size_t>(f)]; }

  friend bool operator==(const PatientRecord&, const PatientRecord&) = default;
};

struct NormStats {
  FeatureVector min{};
  FeatureVector max{};

  friend bool operator==(const NormStats&, const NormStats&) = default;
};

struct DatasetSplit {
  std::vector<PatientRecord> train;
  std::vector<PatientRecord> validation;
  std::vector<PatientRecord> test;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(s.substr(start)));
      return out;
    }
    out.push_back(trim(s.substr(start, pos - start)));
    start = pos + 1;
  }
}

inline std::optional<double> parse_number(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) return std::nullopt;
  return v;
}

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_number(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

inline std::string_view column_name(std::size_t i) { return i < kNumFeatures ? kFeatureNames[i] : "target"; }

}  // namespace detail

/// Checks categorical domains and finiteness; throws ProtocolError naming the column.
inline void validate_features(const FeatureVector& x) {
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    const double v = x[i];
    if (!std::isfinite(v)) throw ProtocolError("column " + std::string(kFeatureNames[i]) + ": value is not finite");
    if (const auto& r = kCategoricalRanges[i]) {
      if (v != std::floor(v) || v < r->lo || v > r->hi) {
        throw ProtocolError("column " + std::string(kFeatureNames[i]) + ": value " + detail::format_number(v) +
                            " outside {" + std::to_string(r->lo) + ".." + std::to_string(r->hi) + "}");
      }
    }
  }
}

/// Parses one CSV data line (13 or 14 fields). `line_no` only decorates errors.
inline PatientRecord parse_record_line(std::string_view line, std::size_t line_no = 1) {
  const auto prefix = "line " + std::to_string(line_no);
  const auto fields = detail::split(line, ',');
  if (fields.size() != kNumFeatures && fields.size() != kNumFeatures + 1) {
    throw ParseError(prefix + ": expected 13 or 14 fields, got " + std::to_string(fields.size()));
  }
  PatientRecord rec;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const auto v = detail::parse_number(fields[i]);
    if (!v) {
      throw ParseError(prefix + ", column " + std::string(detail::column_name(i)) + ": not a number '" +
                       std::string(fields[i]) + "'");
    }
    if (i < kNumFeatures) {
      rec.features[i] = *v;
    } else {
      if (*v != std::floor(*v) || *v < 0) {
        throw ParseError(prefix + ", column target: label must be a non-negative integer");
      }
      // Raw UCI files grade severity 1..4; anything above zero means disease.
      rec.label = *v > 0 ? 1 : 0;
    }
  }
  try {
    validate_features(rec.features);
  } catch (const ProtocolError& e) {
    throw ParseError(prefix + ", " + e.what());
  }
  return rec;
}

/// Parses a whole CSV document. A first line with no numeric field is treated
/// as a header. Blank lines are skipped; LF and CRLF both accepted.
inline std::vector<PatientRecord> parse_csv(std::string_view text) {
  std::vector<PatientRecord> out;
  std::size_t line_no = 0;
  bool first = true;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = detail::trim(text.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty()) continue;
    if (first) {
      first = false;
      const auto fields = detail::split(line, ',');
      const bool header = std::none_of(fields.begin(), fields.end(),
                                       [](std::string_view f) { return detail::parse_number(f).has_value(); });
      if (header) continue;
    }
    out.push_back(parse_record_line(line, line_no));
  }
  return out;
}

inline std::string serialize_record(const PatientRecord& r) {
  std::string line;
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (i) line += ',';
    line += detail::format_number(r.features[i]);
  }
  if (r.label) line += ',' + std::to_string(*r.label);
  return line;
}

inline std::string serialize_csv(std::span<const PatientRecord> records, bool header = true) {
  std::string out;
  if (header) {
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      if (i) out += ',';
      out += kFeatureNames[i];
    }
    out += ",target\n";
  }
  for (const auto& r : records) {
    out += serialize_record(r);
    out += '\n';
  }
  return out;
}

/// Seeded shuffle, then floor(0.7n) train, floor(0.1n) validation, remainder test.
inline DatasetSplit split_dataset(std::span<const PatientRecord> records, std::uint64_t seed) {
  const std::size_t n = records.size();
  if (n < 10) throw invalid_argument("split_dataset: need at least 10 records, got " + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(std::span(order), rng);

  const std::size_t n_train = n * 7 / 10;
  const std::size_t n_val = n / 10;
  DatasetSplit split;
  split.seed = seed;
  for (std::size_t k = 0; k < n; ++k) {
    auto& dst = k < n_train ? split.train : (k < n_train + n_val ? split.validation : split.test);
    dst.push_back(records[order[k]]);
  }
  return split;
}

inline NormStats fit_norm(std::span<const PatientRecord> train) {
  if (train.empty()) throw invalid_argument("fit_norm: empty training set");
  NormStats s{train.front().features, train.front().features};
  for (const auto& r : train) {
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      s.min[i] = std::min(s.min[i], r.features[i]);
      s.max[i] = std::max(s.max[i], r.features[i]);
    }
  }
  return s;
}

/// Min-max scaling clamped to [0, 1]; a constant feature maps to 0.
inline FeatureVector normalize(const FeatureVector& x, const NormStats& stats) {
  FeatureVector out{};
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    const double range = stats.max[i] - stats.min[i];
    if (!(range > 0.0)) {
      out[i] = 0.0;
      continue;
    }
    out[i] = std::clamp((x[i] - stats.min[i]) / range, 0.0, 1.0);
  }
  return out;
}

inline FeatureVector normalize(const PatientRecord& r, const NormStats& stats) { return normalize(r.features, stats); }

inline nlohmann::ordered_json to_json(const NormStats& s) {
  nlohmann::ordered_json j;
  j["features"] = kFeatureNames;
  j["min"] = s.min;
  j["max"] = s.max;
  return j;
}

inline NormStats norm_stats_from_json(const nlohmann::json& j) {
  NormStats s;
  try {
    const auto mn = j.at("min").get<std::vector<double>>();
    const auto mx = j.at("max").get<std::vector<double>>();
    if (mn.size() != kNumFeatures || mx.size() != kNumFeatures) throw ParseError("norm stats: expected 13 values");
    std::copy(mn.begin(), mn.end(), s.min.begin());
    std::copy(mx.begin(), mx.end(), s.max.begin());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("norm stats: ") + e.what());
  }
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (s.min[i] > s.max[i]) throw ParseError("norm stats: min > max for " + std::string(kFeatureNames[i]));
  }
  return s;
}

}  // namespace fogdx
