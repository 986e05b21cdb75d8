#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edgeguard/backend.hpp"
#include "edgeguard/baseline.hpp"
#include "edgeguard/dataset.hpp"
#include "edgeguard/prevention.hpp"
#include "edgeguard/synth.hpp"
#include "edgeguard/telemetry.hpp"

namespace edgeguard {

struct NodeConfig {
  std::string id;
  std::string device = "smart_camera";   // benign profile variant
  double capacity_flows_per_sec = 2000.0;  // load = window flows / capacity
  double latency_ms = 4.0;                 // simulated per-request inference cost
  std::optional<double> energy_j_per_request;
  std::size_t benign_sources = 10;
  double benign_rate = 50.0;  // flows/s across all benign sources
};

struct AttackSchedule {
  int attack_class = kDdosLabel;
  double rate = 1000.0;  // flows/s per targeted node
  double start = 10.0;
  double stop = 30.0;
  std::size_t sources = 50;
  std::vector<std::string> targets;  // empty: every node
};

struct ReplayConfig {
  std::string path;
  DataFormat format = DataFormat::Delimited;
  double rate = 100.0;  // flows/s for records without timestamps
};

enum class Transport { InProcess, Socket };

struct ScenarioConfig {
  std::uint64_t seed = 1;
  double horizon = 40.0;        // seconds of simulated time
  double window_seconds = 1.0;  // decision window
  std::vector<NodeConfig> nodes;
  std::optional<AttackSchedule> attack;
  std::optional<ReplayConfig> replay;  // replaces the generative traffic
  PreventionConfig prevention;
  std::string backend = "baseline";    // "baseline" or "remote:<address>"
  std::size_t training_samples = 6000;
  double captcha_solve_fraction = 0.9;  // benign clients; bots never solve
  bool wall_clock = false;              // measure real inference latency
  bool parallel_nodes = false;
  Transport transport = Transport::InProcess;
};

/// Throws ConfigInvalid when a rate or size is not positive, the attack
/// window leaves [0, horizon], node ids repeat, or a name does not resolve.
void validate(const ScenarioConfig& cfg, const ProfileSet& profiles = ProfileSet::builtin());

/// JSON scenario file. Paths inside it are taken as given.
ScenarioConfig load_scenario(std::istream& in);

struct ScenarioResult {
  std::vector<TelemetryEvent> events;  // merged by (timestamp, node order)
  MonitoringSnapshot snapshot;
  std::map<std::string, std::vector<ActionLogEntry>> action_logs;
};

/// Runs every node for the whole horizon with the given classifier.
ScenarioResult run_scenario(const ScenarioConfig& cfg, const ClassifierBackend& backend,
                            const ProfileSet& profiles = ProfileSet::builtin());

/// Builds the backend named in cfg.backend (the baseline is fitted on a
/// seeded uniform synthetic set) and runs the scenario.
ScenarioResult run_scenario(const ScenarioConfig& cfg,
                            const ProfileSet& profiles = ProfileSet::builtin());

/// Edge traffic is mostly benign, so the scenario baseline trains on a mix
/// with this benign share and the rest spread evenly over attack labels.
inline constexpr double kScenarioBenignShare = 0.4;
std::map<int, double> scenario_training_mix();

/// Baseline used by the scenario runner: fitted on `samples` synthetic flows
/// drawn from scenario_training_mix() with a stream derived from `seed`.
BaselineBackend scenario_baseline(std::uint64_t seed, std::size_t samples,
                                  const ProfileSet& profiles = ProfileSet::builtin());

}  // namespace edgeguard
