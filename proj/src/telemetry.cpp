#include "edgeguard/telemetry.hpp"

#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "edgeguard/error.hpp"

namespace edgeguard {

using ojson = nlohmann::ordered_json;

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Detection: return "Detection";
    case EventKind::Action: return "Action";
    case EventKind::Admission: return "Admission";
    case EventKind::MetricsSample: return "MetricsSample";
  }
  return "Detection";
}

namespace {

EventKind parse_kind(std::string_view s) {
  if (s == "Detection") return EventKind::Detection;
  if (s == "Action") return EventKind::Action;
  if (s == "Admission") return EventKind::Admission;
  if (s == "MetricsSample") return EventKind::MetricsSample;
  throw Error(ErrorCode::SchemaMismatch, "unknown event kind '" + std::string(s) + "'");
}

Verdict parse_verdict(std::string_view s) {
  for (Verdict v : {Verdict::Allow, Verdict::Deny, Verdict::Challenge, Verdict::RedirectHoneypot,
                    Verdict::RateLimited}) {
    if (to_string(v) == s) return v;
  }
  throw Error(ErrorCode::SchemaMismatch, "unknown verdict '" + std::string(s) + "'");
}

TelemetryEvent make_event(EventKind kind, std::string node, std::int64_t window, double ts) {
  TelemetryEvent e;
  e.kind = kind;
  e.node_id = std::move(node);
  e.window_id = window;
  e.timestamp = ts;
  return e;
}

}  // namespace

TelemetryEvent detection_event(std::string node, std::int64_t window, double ts,
                               DetectionPayload p) {
  auto e = make_event(EventKind::Detection, std::move(node), window, ts);
  e.payload = std::move(p);
  return e;
}

TelemetryEvent action_event(std::string node, std::int64_t window, double ts, ActionPayload p) {
  auto e = make_event(EventKind::Action, std::move(node), window, ts);
  e.payload = std::move(p);
  return e;
}

TelemetryEvent admission_event(std::string node, std::int64_t window, double ts,
                               AdmissionPayload p) {
  auto e = make_event(EventKind::Admission, std::move(node), window, ts);
  e.payload = std::move(p);
  return e;
}

TelemetryEvent sample_event(std::string node, std::int64_t window, double ts,
                            MetricsSamplePayload p) {
  auto e = make_event(EventKind::MetricsSample, std::move(node), window, ts);
  e.payload = std::move(p);
  return e;
}

std::string to_json_line(const TelemetryEvent& e) {
  ojson j;
  j["kind"] = to_string(e.kind);
  j["node"] = e.node_id;
  j["window"] = e.window_id;
  j["ts"] = e.timestamp;
  switch (e.kind) {
    case EventKind::Detection: {
      const auto& p = std::get<DetectionPayload>(e.payload);
      j["predicted"] = p.predicted;
      j["truth"] = p.truth;
      j["latency_s"] = p.latency_s;
      if (p.loss) j["loss"] = *p.loss;
      if (p.energy_j) j["energy_j"] = *p.energy_j;
      break;
    }
    case EventKind::Action: {
      const auto& p = std::get<ActionPayload>(e.payload);
      j["actions"] = p.actions.names();
      j["attack_type"] = p.attack_type;
      j["source_count"] = p.source_count;
      break;
    }
    case EventKind::Admission: {
      const auto& p = std::get<AdmissionPayload>(e.payload);
      j["verdict"] = to_string(p.verdict);
      j["truth"] = p.truth;
      j["src_ip"] = p.src_ip;
      break;
    }
    case EventKind::MetricsSample: {
      const auto& p = std::get<MetricsSamplePayload>(e.payload);
      j["load"] = p.load;
      j["active_blocks"] = p.active_blocks;
      j["window_flows"] = p.window_flows;
      break;
    }
  }
  return j.dump();
}

TelemetryEvent parse_json_line(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    TelemetryEvent e = make_event(parse_kind(j.at("kind").get<std::string>()),
                                  j.at("node").get<std::string>(),
                                  j.at("window").get<std::int64_t>(), j.at("ts").get<double>());
    switch (e.kind) {
      case EventKind::Detection: {
        DetectionPayload p;
        p.predicted = j.at("predicted").get<int>();
        p.truth = j.at("truth").get<int>();
        p.latency_s = j.at("latency_s").get<double>();
        if (j.contains("loss")) p.loss = j["loss"].get<double>();
        if (j.contains("energy_j")) p.energy_j = j["energy_j"].get<double>();
        e.payload = p;
        break;
      }
      case EventKind::Action: {
        ActionPayload p;
        for (const auto& a : j.at("actions")) p.actions.add(parse_action(a.get<std::string>()));
        p.attack_type = j.at("attack_type").get<int>();
        p.source_count = j.at("source_count").get<std::size_t>();
        e.payload = p;
        break;
      }
      case EventKind::Admission: {
        AdmissionPayload p;
        p.verdict = parse_verdict(j.at("verdict").get<std::string>());
        p.truth = j.at("truth").get<int>();
        p.src_ip = j.at("src_ip").get<std::string>();
        e.payload = p;
        break;
      }
      case EventKind::MetricsSample: {
        MetricsSamplePayload p;
        p.load = j.at("load").get<double>();
        p.active_blocks = j.at("active_blocks").get<std::size_t>();
        p.window_flows = j.at("window_flows").get<std::size_t>();
        e.payload = p;
        break;
      }
    }
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::SchemaMismatch, std::string("telemetry event: ") + ex.what(),
                std::string(line));
  }
}

void write_events(std::ostream& out, std::span<const TelemetryEvent> events) {
  for (const auto& e : events) out << to_json_line(e) << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "failed to write events");
}

std::vector<TelemetryEvent> read_events(std::istream& in) {
  std::vector<TelemetryEvent> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_json_line(line));
  }
  if (in.bad()) throw Error(ErrorCode::IoFailure, "failed to read events");
  return out;
}

void ChannelSink::publish(const TelemetryEvent& e) {
  std::lock_guard lock(mutex_);
  events_.push_back(e);
}

std::vector<TelemetryEvent> ChannelSink::drain() {
  std::lock_guard lock(mutex_);
  return std::exchange(events_, {});
}

void StreamSink::publish(const TelemetryEvent& e) {
  std::string line = to_json_line(e);
  line.push_back('\n');
  std::string_view rest = line;
  while (!rest.empty()) {
    ssize_t n = ::write(fd_, rest.data(), rest.size());
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw Error(ErrorCode::IoFailure, "telemetry stream write failed");
    rest.remove_prefix(static_cast<std::size_t>(n));
  }
}

std::vector<TelemetryEvent> collect_from_fd(int fd) {
  std::vector<TelemetryEvent> out;
  std::string buf;
  char chunk[8192];
  for (;;) {
    ssize_t n = ::read(fd, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n < 0) throw Error(ErrorCode::IoFailure, "telemetry stream read failed");
    if (n == 0) break;
    buf.append(chunk, static_cast<std::size_t>(n));
    std::size_t start = 0;
    for (std::size_t nl; (nl = buf.find('\n', start)) != std::string::npos; start = nl + 1) {
      if (nl > start) out.push_back(parse_json_line(std::string_view(buf).substr(start, nl - start)));
    }
    buf.erase(0, start);
  }
  if (!buf.empty()) out.push_back(parse_json_line(buf));
  return out;
}

void VerdictCounts::add(Verdict v) {
  switch (v) {
    case Verdict::Allow: ++allowed; break;
    case Verdict::Deny: ++denied; break;
    case Verdict::Challenge: ++challenged; break;
    case Verdict::RateLimited: ++rate_limited; break;
    case Verdict::RedirectHoneypot: ++redirected; break;
  }
}

namespace {

struct Accumulator {
  NodeSnapshot snap;
  std::vector<double> latencies;
  std::optional<double> first_detection, last_detection;
  std::optional<double> first_attack, first_action;

  void add(const TelemetryEvent& e) {
    switch (e.kind) {
      case EventKind::Detection: {
        const auto& p = std::get<DetectionPayload>(e.payload);
        ++snap.detections;
        if (p.predicted == p.truth) ++snap.correct_detections;
        latencies.push_back(p.latency_s);
        if (!first_detection) first_detection = e.timestamp;
        last_detection = e.timestamp;
        break;
      }
      case EventKind::Action:
        ++snap.actions_applied;
        // Only responses issued once attack traffic has arrived count as mitigation.
        if (first_attack && !first_action) first_action = e.timestamp;
        break;
      case EventKind::Admission: {
        const auto& p = std::get<AdmissionPayload>(e.payload);
        ++snap.total_flows;
        snap.verdicts.add(p.verdict);
        if (p.truth == kBenignLabel) {
          snap.benign.add(p.verdict);
        } else {
          snap.attack.add(p.verdict);
          if (!first_attack) first_attack = e.timestamp;
        }
        break;
      }
      case EventKind::MetricsSample: {
        const auto& p = std::get<MetricsSamplePayload>(e.payload);
        snap.active_blocklist_size = p.active_blocks;
        snap.peak_load = std::max(snap.peak_load, p.load);
        break;
      }
    }
  }

  NodeSnapshot finish() {
    if (snap.detections > 0) {
      snap.detection_accuracy =
          static_cast<double>(snap.correct_detections) / static_cast<double>(snap.detections);
      double sum = 0.0;
      for (double l : latencies) sum += l;
      snap.mean_latency_ms = 1000.0 * sum / static_cast<double>(latencies.size());
      std::sort(latencies.begin(), latencies.end());
      const auto rank = static_cast<std::size_t>(
          std::ceil(0.95 * static_cast<double>(latencies.size())));
      snap.p95_latency_ms = 1000.0 * latencies[std::max<std::size_t>(rank, 1) - 1];
      const double span = *last_detection - *first_detection;
      snap.throughput_req_per_sec = span > 0.0 ? static_cast<double>(snap.detections) / span : 0.0;
    }
    if (first_attack && first_action) snap.detection_to_mitigation_s = *first_action - *first_attack;
    return snap;
  }
};

}  // namespace

MonitoringSnapshot aggregate(std::span<const TelemetryEvent> events, std::string model_name) {
  MonitoringSnapshot out;
  std::vector<std::string> order;
  std::map<std::string, Accumulator> per_node;
  std::map<std::string, double> last_ts;
  Accumulator overall;
  overall.snap.node_id = "all";
  double loss_sum = 0.0;
  std::size_t loss_n = 0;
  double energy_sum = 0.0;
  bool has_energy = false;

  for (std::size_t i = 0; i < events.size(); ++i) {
    const TelemetryEvent& e = events[i];
    auto [it, fresh] = last_ts.emplace(e.node_id, e.timestamp);
    if (!fresh) {
      if (e.timestamp < it->second) {
        throw Error(ErrorCode::OutOfOrderEvents,
                    "node " + e.node_id + " timestamps decrease at event " + std::to_string(i),
                    e.node_id, i);
      }
      it->second = e.timestamp;
    } else {
      order.push_back(e.node_id);
      per_node[e.node_id].snap.node_id = e.node_id;
    }
    per_node[e.node_id].add(e);
    overall.add(e);
    if (e.kind == EventKind::Detection) {
      const auto& p = std::get<DetectionPayload>(e.payload);
      out.confusion.add(p.truth, p.predicted);
      if (p.loss) {
        loss_sum += *p.loss;
        ++loss_n;
      }
      if (p.energy_j) {
        energy_sum += *p.energy_j;
        has_energy = true;
      }
    }
  }

  for (const auto& id : order) out.nodes.push_back(per_node[id].finish());
  out.overall = overall.finish();
  out.overall.active_blocklist_size = 0;
  for (const auto& n : out.nodes) out.overall.active_blocklist_size += n.active_blocklist_size;

  MetricsReport& m = out.metrics;
  m.model = std::move(model_name);
  m.samples = out.confusion.total();
  if (out.confusion.total() > 0) {
    const MicroScores s = accuracy_precision_recall(out.confusion);
    m.accuracy = s.accuracy;
    m.micro_precision = s.precision;
    m.micro_recall = s.recall;
    m.micro_f1 = micro_f1(out.confusion);
    m.throughput_req_per_sec = out.overall.throughput_req_per_sec;
    if (loss_n > 0) m.mean_cross_entropy = loss_sum / static_cast<double>(loss_n);
    if (has_energy) m.energy_j_per_req = energy_sum / static_cast<double>(m.samples);
  }
  return out;
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "json") return ReportFormat::Json;
  if (text == "text" || text == "txt") return ReportFormat::Text;
  throw Error(ErrorCode::ConfigInvalid, "unknown report format '" + std::string(text) + "'",
              std::string(text));
}

namespace {

ojson counts_json(const VerdictCounts& c) {
  return ojson{{"allowed", c.allowed},
               {"denied", c.denied},
               {"challenged", c.challenged},
               {"rate_limited", c.rate_limited},
               {"redirected", c.redirected}};
}

VerdictCounts counts_from(const nlohmann::json& j) {
  VerdictCounts c;
  c.allowed = j.at("allowed").get<std::uint64_t>();
  c.denied = j.at("denied").get<std::uint64_t>();
  c.challenged = j.at("challenged").get<std::uint64_t>();
  c.rate_limited = j.at("rate_limited").get<std::uint64_t>();
  c.redirected = j.at("redirected").get<std::uint64_t>();
  return c;
}

ojson node_json(const NodeSnapshot& n) {
  ojson j;
  j["node_id"] = n.node_id;
  j["total_flows"] = n.total_flows;
  j["verdicts"] = counts_json(n.verdicts);
  j["benign"] = counts_json(n.benign);
  j["attack"] = counts_json(n.attack);
  j["detections"] = n.detections;
  j["correct_detections"] = n.correct_detections;
  j["detection_accuracy"] = n.detection_accuracy;
  j["mean_latency_ms"] = n.mean_latency_ms;
  j["p95_latency_ms"] = n.p95_latency_ms;
  j["detection_to_mitigation_s"] =
      n.detection_to_mitigation_s ? ojson(*n.detection_to_mitigation_s) : ojson(nullptr);
  j["throughput_req_per_sec"] = n.throughput_req_per_sec;
  j["actions_applied"] = n.actions_applied;
  j["active_blocklist_size"] = n.active_blocklist_size;
  j["peak_load"] = n.peak_load;
  return j;
}

NodeSnapshot node_from(const nlohmann::json& j) {
  NodeSnapshot n;
  n.node_id = j.at("node_id").get<std::string>();
  n.total_flows = j.at("total_flows").get<std::uint64_t>();
  n.verdicts = counts_from(j.at("verdicts"));
  n.benign = counts_from(j.at("benign"));
  n.attack = counts_from(j.at("attack"));
  n.detections = j.at("detections").get<std::uint64_t>();
  n.correct_detections = j.at("correct_detections").get<std::uint64_t>();
  n.detection_accuracy = j.at("detection_accuracy").get<double>();
  n.mean_latency_ms = j.at("mean_latency_ms").get<double>();
  n.p95_latency_ms = j.at("p95_latency_ms").get<double>();
  if (!j.at("detection_to_mitigation_s").is_null()) {
    n.detection_to_mitigation_s = j["detection_to_mitigation_s"].get<double>();
  }
  n.throughput_req_per_sec = j.at("throughput_req_per_sec").get<double>();
  n.actions_applied = j.at("actions_applied").get<std::uint64_t>();
  n.active_blocklist_size = j.at("active_blocklist_size").get<std::uint64_t>();
  n.peak_load = j.at("peak_load").get<double>();
  return n;
}

ojson opt_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string emit_report(const MonitoringSnapshot& s, ReportFormat format) {
  if (format == ReportFormat::Json) {
    ojson j;
    const MetricsReport& m = s.metrics;
    j["metrics"] = ojson{{"model", m.model},
                         {"samples", m.samples},
                         {"accuracy", m.accuracy},
                         {"micro_f1", m.micro_f1},
                         {"micro_precision", m.micro_precision},
                         {"micro_recall", m.micro_recall},
                         {"mean_cross_entropy", m.mean_cross_entropy},
                         {"energy_j_per_req", opt_json(m.energy_j_per_req)},
                         {"throughput_req_per_sec", m.throughput_req_per_sec},
                         {"train_loss", opt_json(m.train_loss)},
                         {"validation_loss", opt_json(m.validation_loss)}};
    j["overall"] = node_json(s.overall);
    j["nodes"] = ojson::array();
    for (const auto& n : s.nodes) j["nodes"].push_back(node_json(n));
    j["confusion"] = ojson::array();
    for (const auto& row : s.confusion.counts()) j["confusion"].push_back(row);
    return j.dump(2) + "\n";
  }

  std::ostringstream out;
  out << "Detection metrics\n" << results_table_header() << '\n'
      << "|---|---|---|---|---|---|---|---|---|\n" << results_table_row(s.metrics) << "\n\n";
  out << "Edge nodes\n"
      << "| Node | Flows | Allowed | Denied | Challenged | RateLimited | Redirected | "
         "Benign admitted | Attack admitted | Accuracy | Mean ms | p95 ms | "
         "Detect->mitigate s | Req/Sec | Actions | Blocklist |\n"
      << "|---|---|---|---|---|---|---|---|---|---|---|---|---|---|---|---|\n";
  auto row = [&](const NodeSnapshot& n) {
    out << "| " << n.node_id << " | " << n.total_flows << " | " << n.verdicts.allowed << " | "
        << n.verdicts.denied << " | " << n.verdicts.challenged << " | " << n.verdicts.rate_limited
        << " | " << n.verdicts.redirected << " | " << n.benign.allowed << "/" << n.benign.total()
        << " | " << n.attack.allowed << "/" << n.attack.total() << " | "
        << fixed(100.0 * n.detection_accuracy, 2) << "% | " << fixed(n.mean_latency_ms, 3)
        << " | " << fixed(n.p95_latency_ms, 3) << " | "
        << (n.detection_to_mitigation_s ? fixed(*n.detection_to_mitigation_s, 3) : "-") << " | "
        << fixed(n.throughput_req_per_sec, 2) << " | " << n.actions_applied << " | "
        << n.active_blocklist_size << " |\n";
  };
  for (const auto& n : s.nodes) row(n);
  row(s.overall);

  out << "\nConfusion matrix (rows: true label, columns: predicted label)\n     ";
  for (int c = 1; c <= kNumClasses; ++c) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%7d", c);
    out << buf;
  }
  out << '\n';
  for (int r = 1; r <= kNumClasses; ++r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%4d ", r);
    out << buf;
    for (int c = 1; c <= kNumClasses; ++c) {
      std::snprintf(buf, sizeof buf, "%7llu",
                    static_cast<unsigned long long>(s.confusion.at(r, c)));
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

MonitoringSnapshot snapshot_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    MonitoringSnapshot s;
    const auto& m = j.at("metrics");
    s.metrics.model = m.at("model").get<std::string>();
    s.metrics.samples = m.at("samples").get<std::uint64_t>();
    s.metrics.accuracy = m.at("accuracy").get<double>();
    s.metrics.micro_f1 = m.at("micro_f1").get<double>();
    s.metrics.micro_precision = m.at("micro_precision").get<double>();
    s.metrics.micro_recall = m.at("micro_recall").get<double>();
    s.metrics.mean_cross_entropy = m.at("mean_cross_entropy").get<double>();
    s.metrics.energy_j_per_req = opt_from(m, "energy_j_per_req");
    s.metrics.throughput_req_per_sec = m.at("throughput_req_per_sec").get<double>();
    s.metrics.train_loss = opt_from(m, "train_loss");
    s.metrics.validation_loss = opt_from(m, "validation_loss");
    s.overall = node_from(j.at("overall"));
    for (const auto& n : j.at("nodes")) s.nodes.push_back(node_from(n));
    const auto& cm = j.at("confusion");
    if (cm.size() != static_cast<std::size_t>(kNumClasses)) {
      throw Error(ErrorCode::SchemaMismatch, "confusion matrix must be 21x21");
    }
    for (int r = 1; r <= kNumClasses; ++r) {
      const auto& row = cm.at(static_cast<std::size_t>(r - 1));
      if (row.size() != static_cast<std::size_t>(kNumClasses)) {
        throw Error(ErrorCode::SchemaMismatch, "confusion matrix must be 21x21");
      }
      for (int c = 1; c <= kNumClasses; ++c) {
        const auto n = row.at(static_cast<std::size_t>(c - 1)).get<std::uint64_t>();
        if (n > 0) s.confusion.add(r, c, n);
      }
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("snapshot json: ") + e.what());
  }
}

}  // namespace edgeguard
