#pragma once

#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "edgeguard/metrics.hpp"
#include "edgeguard/prevention.hpp"

namespace edgeguard {

enum class EventKind { Detection, Action, Admission, MetricsSample };

std::string_view to_string(EventKind k);

struct DetectionPayload {
  int predicted = 0;
  int truth = 0;                      // ground truth, never shown to the classifier
  double latency_s = 0.0;             // per-request inference latency
  std::optional<double> loss;         // cross-entropy against the truth, nats
  std::optional<double> energy_j;     // ingested energy sample for the request
  friend bool operator==(const DetectionPayload&, const DetectionPayload&) = default;
};

struct ActionPayload {
  ActionSet actions;
  int attack_type = 0;
  std::size_t source_count = 0;
  friend bool operator==(const ActionPayload&, const ActionPayload&) = default;
};

struct AdmissionPayload {
  Verdict verdict = Verdict::Allow;
  int truth = 0;
  std::string src_ip;
  friend bool operator==(const AdmissionPayload&, const AdmissionPayload&) = default;
};

struct MetricsSamplePayload {
  double load = 0.0;
  std::size_t active_blocks = 0;
  std::size_t window_flows = 0;
  friend bool operator==(const MetricsSamplePayload&, const MetricsSamplePayload&) = default;
};

struct TelemetryEvent {
  EventKind kind = EventKind::Detection;
  std::string node_id;
  std::int64_t window_id = 0;
  double timestamp = 0.0;
  std::variant<DetectionPayload, ActionPayload, AdmissionPayload, MetricsSamplePayload> payload;

  friend bool operator==(const TelemetryEvent&, const TelemetryEvent&) = default;
};

TelemetryEvent detection_event(std::string node, std::int64_t window, double ts,
                               DetectionPayload p);
TelemetryEvent action_event(std::string node, std::int64_t window, double ts, ActionPayload p);
TelemetryEvent admission_event(std::string node, std::int64_t window, double ts,
                               AdmissionPayload p);
TelemetryEvent sample_event(std::string node, std::int64_t window, double ts,
                            MetricsSamplePayload p);

/// One flat JSON object per event, keys in a fixed order, so identical event
/// streams serialize byte-identically.
std::string to_json_line(const TelemetryEvent& e);
TelemetryEvent parse_json_line(std::string_view line);
void write_events(std::ostream& out, std::span<const TelemetryEvent> events);
std::vector<TelemetryEvent> read_events(std::istream& in);

/// Edge -> cloud channel.
class TelemetrySink {
 public:
  virtual ~TelemetrySink() = default;
  virtual void publish(const TelemetryEvent& e) = 0;
};

/// In-process channel: events are appended under a lock.
class ChannelSink final : public TelemetrySink {
 public:
  void publish(const TelemetryEvent& e) override;
  std::vector<TelemetryEvent> drain();

 private:
  std::mutex mutex_;
  std::vector<TelemetryEvent> events_;
};

/// Newline-delimited JSON over a stream socket or pipe descriptor. The
/// descriptor is not owned.
class StreamSink final : public TelemetrySink {
 public:
  explicit StreamSink(int fd) : fd_(fd) {}
  void publish(const TelemetryEvent& e) override;

 private:
  int fd_;
};

/// Reads NDJSON events from a descriptor until EOF.
std::vector<TelemetryEvent> collect_from_fd(int fd);

struct VerdictCounts {
  std::uint64_t allowed = 0;
  std::uint64_t denied = 0;
  std::uint64_t challenged = 0;
  std::uint64_t rate_limited = 0;
  std::uint64_t redirected = 0;

  std::uint64_t total() const { return allowed + denied + challenged + rate_limited + redirected; }
  void add(Verdict v);
  friend bool operator==(const VerdictCounts&, const VerdictCounts&) = default;
};

struct NodeSnapshot {
  std::string node_id;
  std::uint64_t total_flows = 0;
  VerdictCounts verdicts;         // all flows
  VerdictCounts benign;           // ground truth benign
  VerdictCounts attack;           // ground truth malicious
  std::uint64_t detections = 0;
  std::uint64_t correct_detections = 0;
  double detection_accuracy = 0.0;
  double mean_latency_ms = 0.0;
  double p95_latency_ms = 0.0;
  /// First Action event at or after the first ground-truth attack arrival,
  /// minus that arrival.
  std::optional<double> detection_to_mitigation_s;
  double throughput_req_per_sec = 0.0;
  std::uint64_t actions_applied = 0;
  std::uint64_t active_blocklist_size = 0;  // latest metrics sample; overall sums nodes
  double peak_load = 0.0;

  friend bool operator==(const NodeSnapshot&, const NodeSnapshot&) = default;
};

struct MonitoringSnapshot {
  std::vector<NodeSnapshot> nodes;  // first-appearance order
  NodeSnapshot overall;             // node_id "all"
  ConfusionMatrix confusion;
  MetricsReport metrics;

  friend bool operator==(const MonitoringSnapshot&, const MonitoringSnapshot&) = default;
};

/// Cloud-side aggregation. Throughput is detections over the span between
/// the first and last Detection timestamps; p95 uses nearest rank. An empty
/// stream gives an all-zero snapshot.
/// Throws OutOfOrderEvents(node, index) when a node's timestamps decrease.
MonitoringSnapshot aggregate(std::span<const TelemetryEvent> events,
                             std::string model_name = "baseline");

enum class ReportFormat { Json, Text };

ReportFormat parse_report_format(std::string_view text);

/// Json re-parses to an equal snapshot via snapshot_from_json. Text shows
/// the metrics row, per-node table and the 21x21 confusion matrix.
std::string emit_report(const MonitoringSnapshot& snapshot, ReportFormat format);
MonitoringSnapshot snapshot_from_json(std::string_view json);

}  // namespace edgeguard
