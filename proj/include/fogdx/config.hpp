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

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "fogdx/error.hpp"
#include "fogdx/heartdata.hpp"
#include "fogdx/neuralnet.hpp"

namespace fogdx {

/// `key = value` lines, `#` comments, blank lines ignored. Later keys win,
/// so command-line overrides are applied with set().
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text, const std::string& source = "config") {
    KeyValueConfig cfg;
    std::size_t line_no = 0, pos = 0;
    while (pos < text.size()) {
      auto end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      auto line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ParseError(source + " line " + std::to_string(line_no) + ": expected key = value");
      }
      const auto key = detail::trim(line.substr(0, eq));
      if (key.empty()) throw ParseError(source + " line " + std::to_string(line_no) + ": empty key");
      cfg.values_[std::string(key)] = std::string(detail::trim(line.substr(eq + 1)));
    }
    return cfg;
  }

  static KeyValueConfig load(const std::string& path) { return parse(read_file(path), path); }

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::optional<std::string> get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  std::string get_string(const std::string& key, std::string fallback) const {
    return get(key).value_or(std::move(fallback));
  }

  double get_double(const std::string& key, double fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    const auto d = detail::parse_number(*v);
    if (!d) throw ParseError("config key " + key + ": not a number '" + *v + "'");
    return *d;
  }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    std::int64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || ptr != v->data() + v->size()) {
      throw ParseError("config key " + key + ": not an integer '" + *v + "'");
    }
    return out;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    throw ParseError("config key " + key + ": not a boolean '" + *v + "'");
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace fogdx
