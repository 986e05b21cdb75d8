#include "edgeguard/scenario.hpp"

#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <istream>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "edgeguard/detector.hpp"
#include "edgeguard/error.hpp"
#include "edgeguard/remote.hpp"
#include "edgeguard/rng.hpp"

namespace edgeguard {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix(seed ^ splitmix(stream));
}

constexpr std::uint64_t kTrafficStream = 0x1000;
constexpr std::uint64_t kRuntimeStream = 0x2000;
constexpr std::uint64_t kTrainingStream = 0xB45E;

std::string dotted(unsigned a, unsigned b, unsigned c, unsigned d) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", a & 255u, b & 255u, c & 255u, d & 255u);
  return buf;
}

[[noreturn]] void invalid(const std::string& what, std::string subject = {}) {
  throw Error(ErrorCode::ConfigInvalid, what, std::move(subject));
}

bool targets(const AttackSchedule& a, const std::string& node) {
  return a.targets.empty() || std::find(a.targets.begin(), a.targets.end(), node) != a.targets.end();
}

double ts_of(const LabeledFlow& f) { return f.flow.timestamp.value_or(0.0); }

// Poisson arrivals for one node, benign first then attack, merged by time.
std::vector<LabeledFlow> generate_traffic(const ScenarioConfig& cfg, std::size_t node_index,
                                          const ProfileSet& profiles) {
  const NodeConfig& node = cfg.nodes[node_index];
  Rng rng(stream_seed(cfg.seed, kTrafficStream + node_index));
  std::vector<LabeledFlow> flows;

  const ClassProfile& device = profiles.variant(kBenignLabel, node.device);
  for (double t = rng.exponential(node.benign_rate); t < cfg.horizon;
       t += rng.exponential(node.benign_rate)) {
    const auto k = static_cast<unsigned>(rng.below(node.benign_sources));
    FlowRecord f = generate_flow(device, rng,
                                 dotted(10, 100 + static_cast<unsigned>(node_index), k >> 8, k));
    f.timestamp = t;
    flows.push_back({std::move(f), kBenignLabel});
  }
  const std::size_t benign_end = flows.size();

  if (cfg.attack && targets(*cfg.attack, node.id)) {
    const AttackSchedule& a = *cfg.attack;
    const auto variants = profiles.for_label(a.attack_class);
    for (double t = a.start + rng.exponential(a.rate); t < a.stop; t += rng.exponential(a.rate)) {
      const auto k = static_cast<unsigned>(rng.below(a.sources));
      const ClassProfile& p = *variants[rng.below(variants.size())];
      FlowRecord f = generate_flow(p, rng, dotted(172, 16, k >> 8, k));
      f.timestamp = t;
      flows.push_back({std::move(f), a.attack_class});
    }
  }
  std::inplace_merge(flows.begin(), flows.begin() + static_cast<std::ptrdiff_t>(benign_end),
                     flows.end(),
                     [](const LabeledFlow& x, const LabeledFlow& y) { return ts_of(x) < ts_of(y); });
  return flows;
}

std::vector<std::vector<LabeledFlow>> replay_traffic(const ScenarioConfig& cfg) {
  const ReplayConfig& r = *cfg.replay;
  std::ifstream in(r.path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open replay file " + r.path, r.path);
  IngestOptions opts;
  opts.format = r.format;
  opts.provenance = Provenance::Mixed;
  LabeledDataset data = ingest(in, opts).dataset;

  const bool timed = !data.records.empty() &&
                     std::all_of(data.records.begin(), data.records.end(),
                                 [](const LabeledFlow& f) { return f.flow.timestamp.has_value(); });
  double t0 = 0.0;
  if (timed) {
    t0 = ts_of(*std::min_element(
        data.records.begin(), data.records.end(),
        [](const LabeledFlow& x, const LabeledFlow& y) { return ts_of(x) < ts_of(y); }));
  }
  std::vector<std::vector<LabeledFlow>> per_node(cfg.nodes.size());
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    LabeledFlow f = data.records[i];
    f.flow.timestamp = timed ? ts_of(f) - t0 : static_cast<double>(i) / r.rate;
    if (!f.flow.src_ip) {
      f.flow.src_ip = dotted(198, 18, static_cast<unsigned>(i >> 8), static_cast<unsigned>(i));
    }
    per_node[i % cfg.nodes.size()].push_back(std::move(f));
  }
  for (auto& flows : per_node) {
    std::stable_sort(flows.begin(), flows.end(), [](const LabeledFlow& x, const LabeledFlow& y) {
      return ts_of(x) < ts_of(y);
    });
  }
  return per_node;
}

struct NodeRun {
  std::vector<TelemetryEvent> events;
  std::vector<ActionLogEntry> log;
  double wall_inference_s = 0.0;
};

// One edge node: admit -> classify -> per-window characterize/decide/apply.
void run_node(const ScenarioConfig& cfg, std::size_t node_index,
              const std::vector<LabeledFlow>& flows, const ClassifierBackend& backend,
              TelemetrySink& sink, NodeRun& out) {
  const NodeConfig& node = cfg.nodes[node_index];
  const PreventionConfig& pc = cfg.prevention;
  Rng rng(stream_seed(cfg.seed, kRuntimeStream + node_index));
  EdgeState state(pc.enforcement);

  const double w = cfg.window_seconds;
  double horizon = cfg.horizon;
  if (!flows.empty()) horizon = std::max(horizon, ts_of(flows.back()) + w * 1e-9);
  const auto windows = static_cast<std::int64_t>(std::ceil(horizon / w - 1e-12));

  bool in_episode = false;
  double episode_start = 0.0;
  std::size_t fi = 0;
  for (std::int64_t k = 0; k < windows; ++k) {
    const double start = static_cast<double>(k) * w;
    const double end = static_cast<double>(k + 1) * w;
    std::vector<ObservedFlow> observed;
    std::size_t window_flows = 0;

    for (; fi < flows.size() && (ts_of(flows[fi]) < end || k + 1 == windows); ++fi) {
      const LabeledFlow& f = flows[fi];
      const double t = ts_of(f);
      ++window_flows;
      const Verdict v = state.admit(f.flow, t);
      if (v == Verdict::Challenge) {
        const bool solved = f.label == kBenignLabel && rng.uniform01() < cfg.captcha_solve_fraction;
        state.resolve_challenge(*f.flow.src_ip, solved, t);
      }
      sink.publish(admission_event(node.id, k, t, {v, f.label, *f.flow.src_ip}));
      if (v != Verdict::Allow) continue;

      const Prediction p = classify(f.flow, backend);
      const double jitter = 0.75 + 0.5 * rng.uniform01();
      double latency = node.latency_ms / 1000.0 * jitter;
      if (cfg.wall_clock) {
        latency = p.latency_seconds;
        out.wall_inference_s += latency;
      }
      DetectionPayload d;
      d.predicted = p.predicted;
      d.truth = f.label;
      d.latency_s = latency;
      d.loss = cross_entropy(f.label, p.probs);
      d.energy_j = node.energy_j_per_request;
      sink.publish(detection_event(node.id, k, t, d));
      observed.push_back({f.flow, p.predicted});
    }

    // Utilization saturates once arrivals exceed capacity.
    const double load =
        std::min(1.0, static_cast<double>(window_flows) / (node.capacity_flows_per_sec * w));
    if (!observed.empty()) {
      const bool malicious = std::any_of(observed.begin(), observed.end(),
                                         [](const ObservedFlow& o) { return o.predicted != kBenignLabel; });
      if (malicious && !in_episode) episode_start = start;
      in_episode = malicious;
      WindowInfo info{w, load, in_episode ? episode_start : end, end, k};
      const AttackContext ctx = characterize(observed, info, pc.thresholds);
      const ActionSet actions = ctx.attack_type == kDdosLabel ? decide(ctx, pc.thresholds)
                                                              : pc.playbook.lookup(ctx.attack_type);
      if (!actions.empty()) {
        state.apply(actions, ctx, end);
        sink.publish(action_event(node.id, k, end, {actions, ctx.attack_type, ctx.source_ips.size()}));
      }
    } else {
      in_episode = false;
    }
    sink.publish(sample_event(node.id, k, end, {load, state.active_blocks(end), window_flows}));
  }
  out.log = state.action_log();
}

// Runs a node with its chosen transport and fills out.events.
void run_node_transport(const ScenarioConfig& cfg, std::size_t i,
                        const std::vector<LabeledFlow>& flows, const ClassifierBackend& backend,
                        NodeRun& out) {
  if (cfg.transport == Transport::InProcess) {
    ChannelSink sink;
    run_node(cfg, i, flows, backend, sink, out);
    out.events = sink.drain();
    return;
  }
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) {
    throw Error(ErrorCode::IoFailure, "socketpair failed");
  }
  std::vector<TelemetryEvent> received;
  std::exception_ptr reader_error;
  std::thread reader([&] {
    try {
      received = collect_from_fd(fds[1]);
    } catch (...) {
      reader_error = std::current_exception();
    }
  });
  std::exception_ptr writer_error;
  try {
    StreamSink sink(fds[0]);
    run_node(cfg, i, flows, backend, sink, out);
  } catch (...) {
    writer_error = std::current_exception();
  }
  ::shutdown(fds[0], SHUT_WR);
  reader.join();
  ::close(fds[0]);
  ::close(fds[1]);
  if (writer_error) std::rethrow_exception(writer_error);
  if (reader_error) std::rethrow_exception(reader_error);
  out.events = std::move(received);
}

}  // namespace

void validate(const ScenarioConfig& cfg, const ProfileSet& profiles) {
  if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon)) invalid("horizon must be positive");
  if (!(cfg.window_seconds > 0.0)) invalid("window_seconds must be positive");
  if (cfg.nodes.empty()) invalid("scenario needs at least one node");
  std::set<std::string> ids;
  for (const auto& n : cfg.nodes) {
    if (n.id.empty()) invalid("node id is empty");
    if (!ids.insert(n.id).second) invalid("duplicate node id " + n.id, n.id);
    if (!(n.capacity_flows_per_sec > 0.0)) invalid("capacity must be positive", n.id);
    if (!(n.latency_ms >= 0.0)) invalid("latency_ms must be non-negative", n.id);
    if (n.energy_j_per_request && !(*n.energy_j_per_request >= 0.0)) {
      invalid("energy_j_per_request must be non-negative", n.id);
    }
    if (!cfg.replay) {
      if (!(n.benign_rate > 0.0)) invalid("benign_rate must be positive", n.id);
      if (n.benign_sources == 0) invalid("benign_sources must be positive", n.id);
      profiles.variant(kBenignLabel, n.device);
    }
  }
  if (cfg.attack && !cfg.replay) {
    const AttackSchedule& a = *cfg.attack;
    if (a.attack_class == kBenignLabel || profiles.for_label(a.attack_class).empty()) {
      invalid("attack class " + std::to_string(a.attack_class) + " has no attack profile");
    }
    if (!(a.rate > 0.0)) invalid("attack rate must be positive");
    if (a.sources == 0) invalid("attack sources must be positive");
    if (!(a.start >= 0.0 && a.start < a.stop && a.stop <= cfg.horizon)) {
      invalid("attack window must lie within [0, horizon]");
    }
    for (const auto& t : a.targets) {
      if (!ids.count(t)) invalid("attack target " + t + " is not a node", t);
    }
  }
  if (cfg.replay) {
    if (cfg.replay->path.empty()) invalid("replay path is empty");
    if (!(cfg.replay->rate > 0.0)) invalid("replay rate must be positive");
  }
  if (!(cfg.captcha_solve_fraction >= 0.0 && cfg.captcha_solve_fraction <= 1.0)) {
    invalid("captcha_solve_fraction must be in [0, 1]");
  }
  if (cfg.backend != "baseline" && cfg.backend.rfind("remote:", 0) != 0) {
    invalid("backend must be 'baseline' or 'remote:<address>'", cfg.backend);
  }
  if (cfg.backend == "baseline" && cfg.training_samples == 0) {
    invalid("training_samples must be positive");
  }
  cfg.prevention.thresholds.validate();
}

ScenarioConfig load_scenario(std::istream& in) {
  ScenarioConfig cfg;
  try {
    const auto j = nlohmann::json::parse(in);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.horizon = j.value("horizon_seconds", cfg.horizon);
    cfg.window_seconds = j.value("window_seconds", cfg.window_seconds);
    for (const auto& n : j.at("nodes")) {
      NodeConfig node;
      node.id = n.at("id").get<std::string>();
      node.device = n.value("device", node.device);
      node.capacity_flows_per_sec = n.value("capacity_flows_per_sec", node.capacity_flows_per_sec);
      node.latency_ms = n.value("latency_ms", node.latency_ms);
      if (n.contains("energy_j_per_request") && !n["energy_j_per_request"].is_null()) {
        node.energy_j_per_request = n["energy_j_per_request"].get<double>();
      }
      node.benign_sources = n.value("benign_sources", node.benign_sources);
      node.benign_rate = n.value("benign_rate", node.benign_rate);
      cfg.nodes.push_back(std::move(node));
    }
    if (j.contains("attack") && !j["attack"].is_null()) {
      const auto& a = j["attack"];
      AttackSchedule s;
      if (a.contains("class")) {
        const auto& c = a["class"];
        s.attack_class = c.is_number() ? c.get<int>()
                                       : Taxonomy::builtin().resolve_label(c.get<std::string>());
      }
      s.rate = a.value("rate", s.rate);
      s.start = a.value("start", s.start);
      s.stop = a.value("stop", s.stop);
      s.sources = a.value("sources", s.sources);
      s.targets = a.value("targets", s.targets);
      cfg.attack = s;
    }
    if (j.contains("replay") && !j["replay"].is_null()) {
      const auto& r = j["replay"];
      ReplayConfig rc;
      rc.path = r.at("path").get<std::string>();
      if (r.contains("format")) rc.format = parse_data_format(r["format"].get<std::string>());
      rc.rate = r.value("rate", rc.rate);
      cfg.replay = rc;
    }
    if (j.contains("prevention")) {
      std::istringstream sub(j["prevention"].dump());
      cfg.prevention = load_prevention_config(sub);
    }
    cfg.backend = j.value("backend", cfg.backend);
    cfg.training_samples = j.value("training_samples", cfg.training_samples);
    cfg.captcha_solve_fraction = j.value("captcha_solve_fraction", cfg.captcha_solve_fraction);
    cfg.wall_clock = j.value("wall_clock", cfg.wall_clock);
    cfg.parallel_nodes = j.value("parallel_nodes", cfg.parallel_nodes);
    const std::string transport = j.value("transport", std::string("inproc"));
    if (transport == "inproc") cfg.transport = Transport::InProcess;
    else if (transport == "socket") cfg.transport = Transport::Socket;
    else invalid("transport must be 'inproc' or 'socket'", transport);
  } catch (const nlohmann::json::exception& e) {
    invalid(std::string("scenario: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigInvalid) throw;
    invalid(std::string("scenario: ") + e.message(), e.subject());
  }
  validate(cfg);
  return cfg;
}

std::map<int, double> scenario_training_mix() {
  std::map<int, double> p;
  const double attack_share = (1.0 - kScenarioBenignShare) / (kNumClasses - 1);
  for (int label = 1; label <= kNumClasses; ++label) {
    p[label] = label == kBenignLabel ? kScenarioBenignShare : attack_share;
  }
  return p;
}

BaselineBackend scenario_baseline(std::uint64_t seed, std::size_t samples,
                                  const ProfileSet& profiles) {
  const LabeledDataset train =
      synthesize(scenario_training_mix(), samples, stream_seed(seed, kTrainingStream), profiles);
  return BaselineBackend::fit(train);
}

ScenarioResult run_scenario(const ScenarioConfig& cfg, const ClassifierBackend& backend,
                            const ProfileSet& profiles) {
  validate(cfg, profiles);
  const std::size_t n = cfg.nodes.size();
  std::vector<std::vector<LabeledFlow>> traffic;
  if (cfg.replay) {
    traffic = replay_traffic(cfg);
  } else {
    for (std::size_t i = 0; i < n; ++i) traffic.push_back(generate_traffic(cfg, i, profiles));
  }

  std::vector<NodeRun> runs(n);
  if (cfg.parallel_nodes && n > 1 && backend.concurrent_safe()) {
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < n; ++i) {
      threads.emplace_back([&, i] {
        try {
          run_node_transport(cfg, i, traffic[i], backend, runs[i]);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) run_node_transport(cfg, i, traffic[i], backend, runs[i]);
  }

  // Merge into one stream ordered by (timestamp, node order, per-node sequence).
  struct Key {
    double ts;
    std::size_t node, seq;
  };
  std::vector<Key> keys;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < runs[i].events.size(); ++s) {
      keys.push_back({runs[i].events[s].timestamp, i, s});
    }
  }
  std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
    if (a.ts != b.ts) return a.ts < b.ts;
    if (a.node != b.node) return a.node < b.node;
    return a.seq < b.seq;
  });

  ScenarioResult result;
  result.events.reserve(keys.size());
  for (const Key& k : keys) result.events.push_back(std::move(runs[k.node].events[k.seq]));
  result.snapshot = aggregate(result.events, backend.descriptor().name);

  if (cfg.wall_clock) {
    // Throughput from measured inference time rather than arrival spacing.
    double wall = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      wall += runs[i].wall_inference_s;
      auto& nodes = result.snapshot.nodes;
      auto it = std::find_if(nodes.begin(), nodes.end(),
                             [&](const NodeSnapshot& s) { return s.node_id == cfg.nodes[i].id; });
      if (it == nodes.end()) continue;
      NodeSnapshot& node = *it;
      node.throughput_req_per_sec =
          runs[i].wall_inference_s > 0.0
              ? static_cast<double>(node.detections) / runs[i].wall_inference_s
              : 0.0;
    }
    auto& overall = result.snapshot.overall;
    overall.throughput_req_per_sec =
        wall > 0.0 ? static_cast<double>(overall.detections) / wall : 0.0;
    result.snapshot.metrics.throughput_req_per_sec = overall.throughput_req_per_sec;
  }
  for (std::size_t i = 0; i < n; ++i) result.action_logs[cfg.nodes[i].id] = std::move(runs[i].log);
  return result;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg, const ProfileSet& profiles) {
  validate(cfg, profiles);
  if (cfg.backend == "baseline") {
    const BaselineBackend backend = scenario_baseline(cfg.seed, cfg.training_samples, profiles);
    return run_scenario(cfg, backend, profiles);
  }
  const RemoteBackend backend(cfg.backend.substr(7));
  return run_scenario(cfg, backend, profiles);
}

}  // namespace edgeguard
