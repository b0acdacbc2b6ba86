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

// fogdx command line: train, serve, submit, bench, report.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "fogdx/fogdx.hpp"

namespace fs = std::filesystem;
using namespace fogdx;

namespace {

enum ExitCode { kOk = 0, kValidation = 2, kNetwork = 3, kInternal = 4 };

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

std::vector<PatientRecord> load_dataset(const std::string& path) {
  if (!fs::exists(path)) throw invalid_argument("dataset not found: " + path);
  return parse_csv(read_file(path));
}

// ---- train

struct TrainArgs {
  std::string dataset;
  std::string out_dir;
  std::size_t members = 1;
  std::string distribution = "equal";
  std::uint64_t seed = 42;
  std::uint64_t split_seed = 1;
  int epochs = TrainConfig{}.epochs;
  int batch_size = TrainConfig{}.batch_size;
  double lr = TrainConfig{}.learning_rate;
};

int cmd_train(const TrainArgs& a) {
  const auto records = load_dataset(a.dataset);
  PipelineOptions opts;
  opts.members = a.members;
  opts.distribution = parse_distribution(a.distribution);
  opts.split_seed = a.split_seed;
  opts.train.seed = a.seed;
  opts.train.epochs = a.epochs;
  opts.train.batch_size = a.batch_size;
  opts.train.learning_rate = a.lr;
  const auto trained = train_pipeline(records, opts);
  write_ensemble(trained, a.out_dir);

  const auto& r = trained.report;
  std::cout << std::fixed << std::setprecision(4);
  std::cout << "split  train=" << r.train_size << " validation=" << r.validation_size << " test=" << r.test_size
            << "\n";
  for (std::size_t i = 0; i < r.members.size(); ++i) {
    const auto& m = r.members[i];
    std::cout << "member " << i << "  n=" << m.train_size << "  train=" << m.train_accuracy
              << "  val=" << m.val_accuracy << "  test=" << m.test_accuracy << "\n";
  }
  std::cout << "ensemble  val=" << r.ensemble_val_accuracy << "  test=" << r.ensemble_test_accuracy
            << "  (mean member test=" << r.mean_member_test_accuracy << ")\n";
  const auto& c = r.confidence;
  std::cout << "confidence  incorrect=" << c.incorrect << "/" << c.predictions << "  max confidence when wrong=";
  if (c.max_incorrect_confidence) {
    std::cout << std::setprecision(2) << *c.max_incorrect_confidence << "%";
  } else {
    std::cout << "n/a";
  }
  std::cout << "  below " << std::setprecision(0) << c.threshold << "%: " << c.gated << " (" << c.incorrect_gated
            << " of them wrong)\n";
  std::cout << "wrote " << (fs::path(a.out_dir) / "manifest.json").string() << "\n";
  return kOk;
}

// ---- serve

// File paths in a config are relative to the config file.
KeyValueConfig load_config(const std::string& path) {
  auto kv = KeyValueConfig::load(path);
  const auto base = fs::path(path).parent_path();
  for (const char* key : {"manifest", "model", "norm", "ui_dir", "dataset"}) {
    if (const auto v = kv.get(key); v && !v->empty() && fs::path(*v).is_relative()) {
      kv.set(key, (base / *v).lexically_normal().string());
    }
  }
  return kv;
}

std::shared_ptr<const WorkerModel> model_from_config(const KeyValueConfig& kv) {
  if (kv.has("manifest")) {
    const auto e = load_ensemble(kv.get_string("manifest", ""));
    const auto member = static_cast<std::size_t>(kv.get_int("member", 0));
    if (member >= e.models.size()) {
      throw invalid_argument("member " + std::to_string(member) + " out of range; manifest has " +
                             std::to_string(e.models.size()));
    }
    return std::make_shared<WorkerModel>(WorkerModel{e.models[member], e.norm});
  }
  if (kv.has("model") && kv.has("norm")) {
    return std::make_shared<WorkerModel>(WorkerModel{
        load_model(kv.get_string("model", "")), norm_stats_from_json(nlohmann::json::parse(read_file(kv.get_string("norm", ""))))});
  }
  throw invalid_argument("config needs 'manifest' (or 'model' and 'norm')");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto& part : detail::split(s, ',')) {
    auto t = std::string(detail::trim(part));
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

WorkerOptions worker_options(const KeyValueConfig& kv, const std::string& default_id) {
  WorkerOptions o;
  o.node_id = kv.get_string("node_id", default_id);
  o.ensemble_timeout_ms = kv.get_double("ensemble_timeout_ms", o.ensemble_timeout_ms);
  o.queue_capacity = static_cast<std::size_t>(kv.get_int("queue_capacity", static_cast<std::int64_t>(o.queue_capacity)));
  o.load_window_ms = kv.get_double("heartbeat_interval_ms", o.load_window_ms);
  return o;
}

void wait_for_signal() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

int cmd_serve(const std::string& role, const std::string& config_path, const std::string& listen_override,
              const std::string& broker_override) {
  auto kv = load_config(config_path);
  if (!listen_override.empty()) kv.set("listen", listen_override);
  if (!broker_override.empty()) kv.set("broker", broker_override);
  const auto listen = net::parse_address(kv.get_string("listen", "127.0.0.1:0"));
  const auto model = model_from_config(kv);

  if (role == "broker") {
    net::BrokerServerOptions o;
    o.broker.config = BrokerConfig::from(kv);
    o.broker.node_id = kv.get_string("node_id", "broker");
    o.broker.cloud_id = kv.get_string("cloud_id", "cloud");
    o.local_worker = worker_options(kv, o.broker.node_id);
    o.listen_host = listen.host;
    o.listen_port = listen.port;
    o.advertise_host = kv.get_string("advertise_host", "");
    o.ui_dir = kv.get_string("ui_dir", "");
    o.probe_load = kv.get_bool("probe_load", true);
    net::BrokerServer server(o, model);
    std::cout << "broker listening on " << server.start() << std::endl;
    wait_for_signal();
    server.stop();
    return kOk;
  }
  if (role == "worker" || role == "cloud") {
    net::WorkerServerOptions o;
    o.worker = worker_options(kv, role);
    o.worker.node_class = role == "cloud" ? NodeClass::Cloud : NodeClass::Worker;
    o.listen_host = listen.host;
    o.listen_port = listen.port;
    o.advertise_host = kv.get_string("advertise_host", "");
    o.broker = role == "cloud" ? "" : kv.get_string("broker", "");
    if (role == "worker" && o.broker.empty()) throw invalid_argument("worker config needs 'broker'");
    o.heartbeat_interval_ms = kv.get_double("heartbeat_interval_ms", o.heartbeat_interval_ms);
    o.peers = split_list(kv.get_string("peers", ""));
    net::WorkerServer server(o, model);
    std::cout << role << " " << o.worker.node_id << " listening on " << server.start() << std::endl;
    wait_for_signal();
    server.stop();
    return kOk;
  }
  throw invalid_argument("unknown role '" + role + "' (broker, worker or cloud)");
}

// ---- submit

struct SubmitArgs {
  std::string broker;
  std::string payload;
  std::string file;
  bool ensemble = false;
  bool latency_tolerant = false;
  bool json = false;
  std::string job_id;
};

void print_response(const JobResponse& r) {
  const auto& t = r.timings;
  std::cout << std::fixed << std::setprecision(3);
  std::cout << "job         " << r.job_id << "\n"
            << "handled_by  " << r.handled_by << "\n"
            << "scenario    " << to_string(r.scenario) << (r.fallback ? " (fallback)" : "") << "\n"
            << "class       " << r.cls << (r.cls == 1 ? " (heart disease)" : " (no heart disease)") << "\n"
            << "confidence  " << std::setprecision(2) << r.confidence << "%\n"
            << "gate        " << to_string(r.gate) << "\n";
  if (!r.member_votes.empty()) {
    std::cout << "votes      ";
    for (int v : r.member_votes) std::cout << " " << v;
    std::cout << (r.partial ? "  (partial)" : "") << "\n";
  }
  std::cout << std::setprecision(3) << "timings ms  arbitration=" << t.arbitration_ms << " comm=" << t.comm_ms
            << " queuing=" << t.queuing_ms << " execution=" << t.execution_ms << " response=" << t.response_ms
            << "\n"
            << "bytes       up=" << t.bytes_up << " down=" << t.bytes_down << "\n";
}

int cmd_submit(const SubmitArgs& a) {
  std::vector<FeatureVector> payloads;
  if (!a.payload.empty()) payloads.push_back(parse_payload(a.payload));
  if (!a.file.empty()) {
    for (const auto& r : load_dataset(a.file)) payloads.push_back(r.features);
  }
  if (payloads.empty()) throw invalid_argument("nothing to submit: give --payload or --file");
  net::GatewayClient client(a.broker);
  auto json_out = nlohmann::ordered_json::array();
  const auto stamp = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
  for (std::size_t i = 0; i < payloads.size(); ++i) {
    JobRequest job;
    job.job_id = a.job_id.empty() ? "gw-" + std::to_string(stamp) + "-" + std::to_string(i) : a.job_id;
    if (!a.job_id.empty() && payloads.size() > 1) job.job_id += "-" + std::to_string(i);
    job.payload = make_payload(payloads[i]);
    job.ensemble = a.ensemble;
    job.latency_tolerant = a.latency_tolerant;
    const auto res = client.submit(job);
    if (a.json) {
      json_out.push_back(to_json(res.response));
    } else {
      if (i) std::cout << "\n";
      print_response(res.response);
    }
  }
  if (a.json) std::cout << (payloads.size() == 1 ? json_out.front() : json_out).dump(2) << "\n";
  return kOk;
}

// ---- bench

int cmd_bench(const std::string& scenario_path, const std::string& out_dir) {
  const auto kv = load_config(scenario_path);
  const auto cfg = SimConfig::from(kv);
  for (const auto& w : cfg.warnings()) std::cerr << "warning: " << w << "\n";
  if (!out_dir.empty()) fs::create_directories(out_dir);

  if (kv.get_bool("sweep", false)) {
    if (cfg.dataset.empty()) throw invalid_argument("sweep needs 'dataset'");
    SweepOptions so;
    so.split_seed = static_cast<std::uint64_t>(kv.get_int("split_seed", 1));
    so.train.seed = static_cast<std::uint64_t>(kv.get_int("train_seed", static_cast<std::int64_t>(so.train.seed)));
    so.train.epochs = static_cast<int>(kv.get_int("epochs", so.train.epochs));
    so.max_workers = static_cast<int>(kv.get_int("max_workers", so.max_workers));
    so.distribution = parse_distribution(kv.get_string("distribution", "equal"));
    const auto rows = sweep_nodes(cfg, load_dataset(cfg.dataset), so);
    const auto csv = sweep_csv(rows);
    std::cout << csv;
    if (!out_dir.empty()) write_text(fs::path(out_dir) / "sweep.csv", csv);
    return kOk;
  }

  const auto result = run_scenario(cfg);
  std::cout << to_table(result.report);
  std::cout << "frames " << result.transport_frames << ", transport bytes " << result.transport_bytes << "\n";
  if (!out_dir.empty()) {
    const fs::path dir(out_dir);
    write_text(dir / "traces.json", traces_json_text(result) + "\n");
    write_text(dir / "traces.csv", traces_csv(result.traces));
    write_text(dir / "report.json", to_json(result.report).dump(2) + "\n");
    std::cout << "wrote " << (dir / "traces.json").string() << "\n";
  }
  return kOk;
}

// ---- report

int cmd_report(const std::string& traces_path, const std::string& csv_path, bool json) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(traces_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(traces_path + ": " + e.what());
  }
  if (!doc.is_array()) throw ParseError(traces_path + ": expected a JSON array of traces");
  std::vector<JobTrace> traces;
  for (const auto& j : doc) traces.push_back(trace_from_json(j));
  auto report = summarize(traces, {}, {}, EnergyModel{}, 0.0);
  report.bandwidth_bytes = job_bytes(traces);
  if (json) {
    std::cout << to_json(report).dump(2) << "\n";
  } else {
    std::cout << to_table(report);
  }
  if (!csv_path.empty()) write_text(csv_path, traces_csv(traces));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fogdx: fog computing heart-disease diagnosis"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "train an ensemble and write model files");
  train->add_option("dataset", ta.dataset, "CSV with 13 features and a target column")->required();
  train->add_option("out_dir", ta.out_dir, "output directory")->required();
  train->add_option("--members", ta.members, "ensemble size")->check(CLI::Range(1, 64));
  train->add_option("--distribution", ta.distribution, "equal or bootstrap")
      ->check(CLI::IsMember({"equal", "bootstrap"}));
  train->add_option("--seed", ta.seed, "base member seed");
  train->add_option("--split-seed", ta.split_seed, "train/validation/test split seed");
  train->add_option("--epochs", ta.epochs)->check(CLI::PositiveNumber);
  train->add_option("--batch-size", ta.batch_size)->check(CLI::PositiveNumber);
  train->add_option("--lr", ta.lr)->check(CLI::NonNegativeNumber);

  std::string role, config, listen, broker;
  auto* serve = app.add_subcommand("serve", "run a broker, worker or cloud node");
  serve->add_option("--role", role)->required()->check(CLI::IsMember({"broker", "worker", "cloud"}));
  serve->add_option("--config", config, "key = value config file")->required();
  serve->add_option("--listen", listen, "host:port, overrides the config");
  serve->add_option("--broker", broker, "broker host:port, overrides the config");

  SubmitArgs sa;
  auto* submit = app.add_subcommand("submit", "send jobs to a broker as a gateway");
  submit->add_option("--broker", sa.broker, "broker host:port")->required();
  auto* payload_opt = submit->add_option("--payload", sa.payload, "13 comma-separated features");
  submit->add_option("--file", sa.file, "CSV of patients")->excludes(payload_opt);
  submit->add_flag("--ensemble", sa.ensemble);
  submit->add_flag("--latency-tolerant", sa.latency_tolerant);
  submit->add_option("--job-id", sa.job_id);
  submit->add_flag("--json", sa.json, "print the raw responses");

  std::string scenario, out_dir;
  auto* bench = app.add_subcommand("bench", "run a simulated scenario or node sweep");
  bench->add_option("--scenario", scenario, "scenario config file")->required();
  bench->add_option("--out", out_dir, "directory for traces, reports and CSV tables");

  std::string traces_path, csv_path;
  bool report_json = false;
  auto* report = app.add_subcommand("report", "summarize a traces JSON file");
  report->add_option("--traces", traces_path)->required();
  report->add_option("--csv", csv_path, "also write per-job CSV");
  report->add_flag("--json", report_json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }

  try {
    if (*train) return cmd_train(ta);
    if (*serve) return cmd_serve(role, config, listen, broker);
    if (*submit) return cmd_submit(sa);
    if (*bench) return cmd_bench(scenario, out_dir);
    if (*report) return cmd_report(traces_path, csv_path, report_json);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::Validation: return kValidation;
      case ErrorKind::Network: return kNetwork;
      case ErrorKind::Internal: return kInternal;
    }
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}
