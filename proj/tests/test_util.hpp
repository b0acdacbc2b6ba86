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
#include <random>
#include <string>
#include <vector>

#include "fogdx/heartdata.hpp"
#include "fogdx/neuralnet.hpp"

namespace fogdx::test {

inline std::string data_path(const std::string& name) { return std::string(FOGDX_DATA_DIR) + "/" + name; }

inline std::vector<PatientRecord> cleveland() { return parse_csv(read_file(data_path("cleveland.csv"))); }

// The ten printed sample rows, with the printed target column.
inline const std::vector<std::string> kSampleRows = {
    "63,1,3,145,233,1,0,150,0,2.3,0,0,1,1", "37,1,2,130,250,0,1,187,0,3.5,0,0,2,1",
    "41,0,1,130,204,0,0,172,0,1.4,2,0,2,1", "56,1,1,120,236,0,1,178,0,0.8,2,0,2,1",
    "57,0,0,120,354,0,1,163,1,0.6,2,0,2,1", "62,0,0,140,268,0,0,160,0,3.6,0,2,2,0",
    "63,1,0,130,254,0,0,147,0,1.4,1,1,3,0", "53,1,0,140,203,1,0,155,1,3.1,0,0,3,0",
    "56,1,2,130,256,1,0,142,1,0.6,1,1,1,0", "48,1,1,110,229,0,1,168,0,1,0,0,3,0",
};

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("fogdx_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// Random but valid normalized examples.
inline std::vector<Example> random_examples(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Example> out(n);
  for (auto& e : out) {
    for (auto& v : e.x) v = u(g);
    e.y = static_cast<int>(g() & 1);
  }
  return out;
}

}  // namespace fogdx::test
