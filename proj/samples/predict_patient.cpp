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

// Trains one model on the bundled Cleveland data and diagnoses a patient.
//
//   predict_patient [dataset.csv]

#include <iomanip>
#include <iostream>

#include "fogdx/fogdx.hpp"

int main(int argc, char** argv) {
  const std::string path = argc > 1 ? argv[1] : FOGDX_DATA_DIR "/cleveland.csv";
  try {
    const auto records = fogdx::parse_csv(fogdx::read_file(path));
    const auto trained = fogdx::train_pipeline(records, {});
    const fogdx::WorkerModel worker{trained.models.front(), trained.norm};

    const auto patient = fogdx::parse_payload("63,1,3,145,233,1,0,150,0,2.3,0,0,1");
    const auto r = worker.predict(patient);
    std::cout << std::fixed << std::setprecision(3) << "test accuracy " << trained.report.ensemble_test_accuracy
              << "\nclass " << r.cls << "  p=(" << r.p0 << ", " << r.p1 << ")  confidence " << std::setprecision(1)
              << r.confidence << "%  " << fogdx::to_string(fogdx::gate(r)) << "\n";
  } catch (const fogdx::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
}
