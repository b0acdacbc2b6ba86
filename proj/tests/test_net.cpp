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

#include <fstream>

#include <gtest/gtest.h>

#include "fogdx/net.hpp"
#include "sim_rig.hpp"
#include "test_util.hpp"

using namespace fogdx;
using namespace fogdx::net;
using fogdx::test::biased_model;
using fogdx::test::row1_payload;

namespace {

/// Broker, two workers and a cloud node on localhost ephemeral ports.
class LocalStack : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    ui_dir = fogdx::test::temp_dir("ui").string();
    std::ofstream(ui_dir + "/index.html") << "<html>gateway</html>";

    WorkerServerOptions c;
    c.worker.node_id = "cloud";
    c.worker.node_class = NodeClass::Cloud;
    cloud = std::make_unique<WorkerServer>(c, biased_model(3.0));
    const auto cloud_addr = cloud->start();

    BrokerServerOptions b;
    b.broker.config.cloud_endpoint = cloud_addr;
    b.ui_dir = ui_dir;
    broker = std::make_unique<BrokerServer>(b, biased_model(-2.0));
    const auto broker_addr = broker->start();

    for (int i = 1; i <= 2; ++i) {
      WorkerServerOptions w;
      w.worker.node_id = "worker-" + std::to_string(i);
      w.broker = broker_addr;
      w.heartbeat_interval_ms = 200.0;
      workers.push_back(std::make_unique<WorkerServer>(w, biased_model(i == 1 ? 2.0 : 1.0)));
    }
    std::vector<std::string> addrs;
    for (auto& w : workers) addrs.push_back(w->start());
    workers[0]->set_peers({addrs[1]});
    workers[1]->set_peers({addrs[0]});
    for (auto& w : workers) ASSERT_TRUE(w->beat());
  }

  static void TearDownTestSuite() {
    for (auto& w : workers) w->stop();
    workers.clear();
    broker.reset();
    cloud.reset();
  }

  static JobRequest job(const std::string& id, bool ensemble = false, bool tolerant = false) {
    return {id, row1_payload(), ensemble, tolerant, 0, false};
  }

  static inline std::string ui_dir;
  static inline std::unique_ptr<WorkerServer> cloud;
  static inline std::unique_ptr<BrokerServer> broker;
  static inline std::vector<std::unique_ptr<WorkerServer>> workers;
};

}  // namespace

TEST(Address, ParseAndFormat) {
  const auto a = parse_address("http://127.0.0.1:8080/");
  EXPECT_EQ(a.host, "127.0.0.1");
  EXPECT_EQ(a.port, 8080);
  EXPECT_EQ(format_address(a.host, a.port), "127.0.0.1:8080");
  EXPECT_THROW(parse_address("localhost"), Error);
  EXPECT_THROW(parse_address("h:99999"), Error);
  EXPECT_THROW(parse_address("h:8x"), Error);
}

TEST(Gateway, UnreachableBrokerIsNetworkError) {
  GatewayClient g("127.0.0.1:1", {300, 300});
  try {
    g.submit({"j", row1_payload(), false, false, 0, false});
    FAIL() << "expected throw";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Network);
  }
}

TEST_F(LocalStack, WorkerJobEndToEnd) {
  GatewayClient g(broker->address());
  const auto r = g.submit(job("net-1"));
  EXPECT_EQ(r.decision.scenario, Scenario::Worker);
  EXPECT_EQ(r.response.handled_by.rfind("worker-", 0), 0u);
  EXPECT_EQ(r.response.cls, 1);
  const auto& t = r.trace;
  EXPECT_NEAR(latency(t), *t.response_ms - *t.arbitration_ms - *t.execution_ms, 1e-6);
  EXPECT_GE(*t.execution_ms, 0.0);
  EXPECT_GT(t.bytes_up, 0);
  EXPECT_GT(t.bytes_down, 0);
}

TEST_F(LocalStack, EnsembleJobCollectsPeerVote) {
  GatewayClient g(broker->address());
  const auto r = g.submit(job("net-ens", true));
  EXPECT_EQ(r.decision.scenario, Scenario::Worker);
  EXPECT_FALSE(r.response.partial);
  EXPECT_EQ(r.response.member_votes.size(), 2u);
  EXPECT_EQ(r.response.cls, 1);
}

TEST_F(LocalStack, LatencyTolerantGoesThroughBrokerToCloud) {
  GatewayClient g(broker->address());
  const auto r = g.submit(job("net-cloud", false, true));
  EXPECT_EQ(r.decision.scenario, Scenario::Cloud);
  EXPECT_EQ(r.decision.target, broker->address());
  EXPECT_EQ(r.response.scenario, Scenario::Cloud);
  EXPECT_EQ(r.response.handled_by, "cloud");
  EXPECT_FALSE(r.response.fallback);
}

TEST_F(LocalStack, RelayFlagReturnsResponse) {
  auto j = job("net-relay");
  j.relay = true;
  const auto r = http_call(broker->address(), "POST", endpoint::kJob, encode(j));
  ASSERT_TRUE(r.has_value());
  ASSERT_EQ(r->status, 200) << r->body;
  const auto resp = decode<JobResponse>(r->body);
  EXPECT_EQ(resp.job_id, "net-relay");
  EXPECT_GE(resp.timings.arbitration_ms, 0.0);
}

TEST_F(LocalStack, NodesMetricsAndUi) {
  const auto nodes = http_call(broker->address(), "GET", endpoint::kNodes, "");
  ASSERT_TRUE(nodes && nodes->status == 200);
  const auto arr = nlohmann::json::parse(nodes->body);
  ASSERT_EQ(arr.size(), 2u);
  EXPECT_EQ(arr[0]["node_id"], "worker-1");
  EXPECT_TRUE(arr[0]["live"].get<bool>());

  const auto metrics = http_call(broker->address(), "GET", endpoint::kMetrics, "");
  ASSERT_TRUE(metrics && metrics->status == 200);
  EXPECT_TRUE(nlohmann::json::parse(metrics->body).contains("jobs_arbitrated"));

  const auto hp = parse_address(broker->address());
  httplib::Client cli(hp.host, hp.port);
  const auto page = cli.Get("/ui/index.html");
  ASSERT_TRUE(page);
  EXPECT_EQ(page->status, 200);
  EXPECT_NE(page->body.find("gateway"), std::string::npos);
}

TEST_F(LocalStack, MalformedInputsAre400) {
  const auto bad_json = http_call(broker->address(), "POST", endpoint::kJob, "{oops");
  ASSERT_TRUE(bad_json);
  EXPECT_EQ(bad_json->status, 400);
  const auto bad_payload = http_call(workers[0]->address(), "POST", endpoint::kInfer,
                                     encode(InferRequest{"x", "1,2,3,4,5,6,7,8,9,10,11,12", false, Scenario::Worker, 0}));
  ASSERT_TRUE(bad_payload);
  EXPECT_EQ(bad_payload->status, 400);
  GatewayClient g(broker->address());
  EXPECT_THROW(g.submit({"j", "1,2,3", false, false, 0, false}), ProtocolError);
}

TEST(CloudFallback, UnreachableCloudServedAtEdge) {
  BrokerServerOptions b;
  b.broker.config.cloud_endpoint = "127.0.0.1:1";
  BrokerServer broker(b, biased_model(-2.0));
  broker.start();
  GatewayClient g(broker.address());
  const auto r = g.submit({"fb", row1_payload(), false, true, 0, false});
  EXPECT_EQ(r.decision.scenario, Scenario::Cloud);
  EXPECT_TRUE(r.response.fallback);
  EXPECT_EQ(r.response.handled_by, "broker");
}
