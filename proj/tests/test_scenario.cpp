#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "edgeguard/error.hpp"
#include "edgeguard/scenario.hpp"

using namespace edgeguard;

namespace {

ScenarioConfig load(const std::string& name) {
  std::ifstream in(std::string(EDGEGUARD_SOURCE_DIR "/config/scenarios/") + name);
  REQUIRE(in);
  return load_scenario(in);
}

std::string serialize(const std::vector<TelemetryEvent>& events) {
  std::string out;
  for (const auto& e : events) out += to_json_line(e) + "\n";
  return out;
}

// Short two-node run used where the full files would be slow.
ScenarioConfig small_ddos() {
  ScenarioConfig cfg;
  cfg.seed = 5;
  cfg.horizon = 12.0;
  cfg.training_samples = 3000;
  cfg.nodes = {NodeConfig{"a"}, NodeConfig{"b", "smart_meter", 1000.0, 8.0}};
  AttackSchedule atk;
  atk.rate = 800.0;
  atk.start = 4.0;
  atk.stop = 10.0;
  atk.targets = {"a"};
  cfg.attack = atk;
  return cfg;
}

}  // namespace

TEST_CASE("scenario files load and validate") {
  const ScenarioConfig d = load("ddos_flood.json");
  CHECK(d.seed == 42);
  CHECK(d.nodes.size() == 3);
  REQUIRE(d.attack.has_value());
  CHECK(d.attack->attack_class == kDdosLabel);
  CHECK(d.attack->targets == std::vector<std::string>{"edge-camera"});
  CHECK_NOTHROW(validate(d));
  const ScenarioConfig b = load("benign.json");
  CHECK_FALSE(b.attack.has_value());
  CHECK_NOTHROW(validate(b));
}

TEST_CASE("benign traffic triggers no actions") {
  const ScenarioResult r = run_scenario(load("benign.json"));
  for (const auto& e : r.events) CHECK(e.kind != EventKind::Action);
  CHECK(r.snapshot.overall.actions_applied == 0);
  CHECK(r.snapshot.overall.benign.allowed == r.snapshot.overall.benign.total());
  CHECK(r.snapshot.overall.total_flows > 0);
}

TEST_CASE("ddos flood is mitigated within one window of onset") {
  const ScenarioConfig cfg = load("ddos_flood.json");
  const ScenarioResult r = run_scenario(cfg);
  const TelemetryEvent* first_action = nullptr;
  for (const auto& e : r.events) {
    if (e.kind == EventKind::Action) {
      first_action = &e;
      break;
    }
  }
  REQUIRE(first_action != nullptr);
  CHECK(first_action->node_id == "edge-camera");
  CHECK(first_action->timestamp <= cfg.attack->start + 2 * cfg.window_seconds);
  const auto& p = std::get<ActionPayload>(first_action->payload);
  CHECK(p.attack_type == kDdosLabel);
  CHECK(p.actions.contains(Action::BlockIPs));
  CHECK(p.actions.contains(Action::CaptchaDeployment));

  std::uint64_t bot_allowed_after = 0;
  for (const auto& e : r.events) {
    if (e.kind != EventKind::Admission || e.timestamp <= first_action->timestamp) continue;
    const auto& a = std::get<AdmissionPayload>(e.payload);
    if (a.truth != kBenignLabel && a.verdict == Verdict::Allow) ++bot_allowed_after;
  }
  CHECK(bot_allowed_after == 0);
  const NodeSnapshot& all = r.snapshot.overall;
  CHECK(all.benign.allowed >= 0.99 * static_cast<double>(all.benign.total()));
  REQUIRE(all.detection_to_mitigation_s.has_value());
  CHECK(*all.detection_to_mitigation_s <= 2 * cfg.window_seconds);
}

TEST_CASE("runs are deterministic across transports and threading") {
  ScenarioConfig cfg = small_ddos();
  const BaselineBackend backend = scenario_baseline(cfg.seed, cfg.training_samples);
  const std::string ref = serialize(run_scenario(cfg, backend).events);
  CHECK(serialize(run_scenario(cfg, backend).events) == ref);

  cfg.transport = Transport::Socket;
  CHECK(serialize(run_scenario(cfg, backend).events) == ref);

  cfg.transport = Transport::InProcess;
  cfg.parallel_nodes = true;
  CHECK(serialize(run_scenario(cfg, backend).events) == ref);

  cfg.seed = 6;
  CHECK(serialize(run_scenario(cfg, backend).events) != ref);
}

TEST_CASE("per-flow accounting is conserved") {
  const ScenarioConfig cfg = small_ddos();
  const ScenarioResult r = run_scenario(cfg);
  const NodeSnapshot& all = r.snapshot.overall;
  std::uint64_t admissions = 0, detections = 0;
  double last = -1.0;
  for (const auto& e : r.events) {
    CHECK(e.timestamp >= last);
    last = e.timestamp;
    admissions += e.kind == EventKind::Admission;
    detections += e.kind == EventKind::Detection;
  }
  // Flows denied at admission never reach the classifier.
  CHECK(detections <= admissions);
  CHECK(detections >= all.verdicts.allowed);
  CHECK(all.total_flows == admissions);
  CHECK(all.verdicts.total() == admissions);
  CHECK(all.benign.total() + all.attack.total() == admissions);
  CHECK(r.snapshot.confusion.total() == detections);
  std::uint64_t node_sum = 0;
  for (const auto& n : r.snapshot.nodes) node_sum += n.total_flows;
  CHECK(node_sum == all.total_flows);
  CHECK(r.action_logs.at("a").size() >= 1);
  CHECK(r.action_logs.at("b").empty());
}

TEST_CASE("replayed records are spread over nodes") {
  const std::string path = "scenario_replay_test.tsv";
  {
    std::ofstream out(path);
    export_dataset(out, synthesize(uniform_proportions(), 300, 3), DataFormat::Delimited);
  }
  ScenarioConfig cfg;
  cfg.horizon = 4.0;
  cfg.training_samples = 2000;
  cfg.nodes = {NodeConfig{"x"}, NodeConfig{"y"}};
  cfg.replay = ReplayConfig{path, DataFormat::Delimited, 100.0};
  const ScenarioResult r = run_scenario(cfg);
  std::remove(path.c_str());
  REQUIRE(r.snapshot.nodes.size() == 2);
  CHECK(r.snapshot.overall.total_flows == 300);
  CHECK(r.snapshot.nodes[0].total_flows == 150);
}

TEST_CASE("invalid scenarios are rejected") {
  auto expect_invalid = [](const ScenarioConfig& cfg) {
    try {
      validate(cfg);
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ConfigInvalid);
    }
  };
  ScenarioConfig cfg = small_ddos();
  CHECK_NOTHROW(validate(cfg));

  ScenarioConfig c = cfg;
  c.nodes.clear();
  expect_invalid(c);
  c = cfg;
  c.nodes[1].id = "a";
  expect_invalid(c);
  c = cfg;
  c.nodes[0].device = "toaster";
  expect_invalid(c);
  c = cfg;
  c.attack->stop = 99.0;
  expect_invalid(c);
  c = cfg;
  c.attack->targets = {"nowhere"};
  expect_invalid(c);
  c = cfg;
  c.window_seconds = 0.0;
  expect_invalid(c);
  c = cfg;
  c.nodes[0].benign_rate = -1.0;
  expect_invalid(c);

  std::istringstream bad_json("{\"nodes\": 3}");
  CHECK_THROWS_AS(load_scenario(bad_json), Error);
  std::istringstream bad_transport(R"({"nodes":[{"id":"a"}],"transport":"carrier-pigeon"})");
  CHECK_THROWS_AS(load_scenario(bad_transport), Error);
}
