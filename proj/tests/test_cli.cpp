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

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "fogdx/ensemble.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;  // stdout and stderr together
};

Run fogdx_cli(const std::string& args) {
  const std::string cmd = std::string(FOGDX_CLI) + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  while (const auto n = fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string shell_arg(const fs::path& p) { return "'" + p.string() + "'"; }

const std::string kRow1 = "63,1,3,145,233,1,0,150,0,2.3,0,0,1";

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(fogdx_cli("").code, 2);
  EXPECT_EQ(fogdx_cli("nonsense").code, 2);
  EXPECT_EQ(fogdx_cli("train").code, 2);
  EXPECT_EQ(fogdx_cli("train --members 0 a b").code, 2);
  EXPECT_EQ(fogdx_cli("--help").code, 0);
}

TEST(Cli, MissingDatasetExitsTwo) {
  const auto r = fogdx_cli("train /nonexistent/data.csv " + shell_arg(fogdx::test::temp_dir("cli_missing")));
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_NE(r.out.find("error"), std::string::npos);
}

TEST(Cli, ShortPayloadExitsTwo) {
  const auto r = fogdx_cli("submit --broker 127.0.0.1:1 --payload 1,2,3,4,5,6,7,8,9,10,11,12");
  EXPECT_EQ(r.code, 2) << r.out;
}

TEST(Cli, UnreachableBrokerExitsThree) {
  const auto r = fogdx_cli("submit --broker 127.0.0.1:1 --payload " + kRow1);
  EXPECT_EQ(r.code, 3) << r.out;
}

TEST(Cli, MissingServeConfigExitsTwo) {
  EXPECT_EQ(fogdx_cli("serve --role worker --config /nonexistent.conf").code, 2);
}

TEST(Cli, TrainBenchReport) {
  const auto dir = fogdx::test::temp_dir("cli_train");
  const auto models = dir / "models";
  auto r = fogdx_cli("train " + shell_arg(fogdx::test::data_path("cleveland.csv")) + " " + shell_arg(models) +
                     " --members 5 --seed 3");
  ASSERT_EQ(r.code, 0) << r.out;
  for (int i = 0; i < 5; ++i) EXPECT_TRUE(fs::exists(models / ("member_" + std::to_string(i) + ".mlp"))) << i;
  const auto loaded = fogdx::load_ensemble((models / "manifest.json").string());
  EXPECT_EQ(loaded.models.size(), 5u);

  const auto scenario = dir / "scenario.conf";
  std::ofstream(scenario) << "n_workers = 3\nn_jobs = 12\nensemble = true\nmanifest = models/manifest.json\n"
                          << "dataset = " << fogdx::test::data_path("cleveland.csv") << "\n";
  const auto out = dir / "out";
  r = fogdx_cli("bench --scenario " + shell_arg(scenario) + " --out " + shell_arg(out));
  ASSERT_EQ(r.code, 0) << r.out;
  for (const char* f : {"traces.json", "traces.csv", "report.json"}) EXPECT_TRUE(fs::exists(out / f)) << f;
  const auto traces = nlohmann::json::parse(fogdx::read_file((out / "traces.json").string()));
  EXPECT_EQ(traces.size(), 12u);

  r = fogdx_cli("report --json --traces " + shell_arg(out / "traces.json") + " --csv " + shell_arg(dir / "t.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto report = nlohmann::json::parse(r.out);
  EXPECT_EQ(report["jobs"], 12);
  EXPECT_TRUE(fs::exists(dir / "t.csv"));
}

TEST(Cli, ReportRejectsBadTraces) {
  const auto dir = fogdx::test::temp_dir("cli_report");
  std::ofstream(dir / "bad.json") << "{\"not\": \"an array\"}";
  EXPECT_EQ(fogdx_cli("report --traces " + shell_arg(dir / "bad.json")).code, 2);
  std::ofstream(dir / "broken.json") << "[{";
  EXPECT_EQ(fogdx_cli("report --traces " + shell_arg(dir / "broken.json")).code, 2);
}

TEST(Cli, BenchShippedScenarios) {
  for (const char* name : {"worker.conf", "cloud.conf", "ensemble.conf"}) {
    const auto r = fogdx_cli("bench --scenario " + shell_arg(fs::path(FOGDX_CONFIG_DIR) / "scenarios" / name));
    EXPECT_EQ(r.code, 0) << name << "\n" << r.out;
    EXPECT_NE(r.out.find("latency"), std::string::npos);
  }
}
