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

// Worker versus cloud placement, then ensemble versus single model, on the
// simulated network.

#include <iostream>

#include "fogdx/fogdx.hpp"

int main() {
  fogdx::SimConfig cfg;
  cfg.seed = 7;
  cfg.n_jobs = 100;
  cfg.cloud_delay_ms = 100;
  cfg.lan_delay_ms = 2;

  auto show = [](const char* title, const fogdx::SimConfig& c) {
    const auto r = fogdx::run_scenario(c);
    std::cout << "== " << title << "\n" << fogdx::to_table(r.report) << "\n";
  };

  show("worker", cfg);
  auto cloud = cfg;
  cloud.latency_tolerant = true;
  show("cloud", cloud);
  auto ensemble = cfg;
  ensemble.ensemble = true;
  show("ensemble of 2", ensemble);
}
