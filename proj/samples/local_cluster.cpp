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

// A broker, two workers and a cloud node on localhost, then one gateway job
// with and without the ensemble.

#include <iostream>
#include <thread>

#include "fogdx/fogdx.hpp"

using namespace fogdx;

int main() {
  const auto records = parse_csv(read_file(FOGDX_DATA_DIR "/cleveland.csv"));
  PipelineOptions opts;
  opts.members = 2;
  const auto trained = train_pipeline(records, opts);
  auto model = [&](std::size_t i) { return std::make_shared<WorkerModel>(WorkerModel{trained.models[i], trained.norm}); };

  net::WorkerServerOptions co;
  co.worker.node_id = "cloud";
  co.worker.node_class = NodeClass::Cloud;
  net::WorkerServer cloud(co, model(0));
  const auto cloud_addr = cloud.start();

  net::BrokerServerOptions bo;
  bo.broker.config.cloud_endpoint = cloud_addr;
  bo.broker.config.heartbeat_interval_ms = 200;
  net::BrokerServer broker(bo, model(0));
  const auto broker_addr = broker.start();

  std::vector<std::unique_ptr<net::WorkerServer>> workers;
  for (std::size_t i = 0; i < 2; ++i) {
    net::WorkerServerOptions wo;
    wo.worker.node_id = "worker-" + std::to_string(i + 1);
    wo.broker = broker_addr;
    wo.heartbeat_interval_ms = 200;
    workers.push_back(std::make_unique<net::WorkerServer>(wo, model(i)));
    workers.back()->start();
  }
  workers[0]->set_peers({workers[1]->address()});
  workers[1]->set_peers({workers[0]->address()});
  std::this_thread::sleep_for(std::chrono::milliseconds(300));

  net::GatewayClient gateway(broker_addr);
  for (bool ensemble : {false, true}) {
    JobRequest job;
    job.job_id = ensemble ? "demo-ensemble" : "demo-single";
    job.payload = "63,1,3,145,233,1,0,150,0,2.3,0,0,1";
    job.ensemble = ensemble;
    const auto r = gateway.submit(job);
    std::cout << nlohmann::json::parse(encode(r.response)).dump(2) << "\n";
  }
}
