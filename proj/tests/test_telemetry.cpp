#include <doctest.h>

#include <unistd.h>

#include <sstream>
#include <thread>

#include "edgeguard/error.hpp"
#include "edgeguard/telemetry.hpp"

using namespace edgeguard;

namespace {

std::vector<TelemetryEvent> six_events() {
  return {
      admission_event("n1", 0, 1.0, {Verdict::Allow, 3, "10.0.0.1"}),
      detection_event("n1", 0, 1.0, {3, 3, 0.002, 0.1, 0.2}),
      admission_event("n1", 1, 2.0, {Verdict::Allow, 10, "172.16.0.1"}),
      detection_event("n1", 1, 2.0, {10, 10, 0.004, 0.3, 0.4}),
      action_event("n1", 2, 3.0, {ActionSet{Action::BlockIPs}, 10, 1}),
      sample_event("n1", 2, 3.0, {0.5, 1, 2}),
  };
}

}  // namespace

TEST_CASE("hand-computed snapshot for a six-event stream") {
  const MonitoringSnapshot s = aggregate(six_events(), "m");
  REQUIRE(s.nodes.size() == 1);
  const NodeSnapshot& n = s.nodes[0];
  CHECK(n.node_id == "n1");
  CHECK(n.total_flows == 2);
  CHECK(n.verdicts.allowed == 2);
  CHECK(n.benign.allowed == 1);
  CHECK(n.attack.allowed == 1);
  CHECK(n.detections == 2);
  CHECK(n.correct_detections == 2);
  CHECK(n.detection_accuracy == 1.0);
  CHECK(n.mean_latency_ms == doctest::Approx(3.0));
  CHECK(n.p95_latency_ms == doctest::Approx(4.0));
  CHECK(n.detection_to_mitigation_s == std::optional<double>(1.0));
  CHECK(n.throughput_req_per_sec == doctest::Approx(2.0));
  CHECK(n.actions_applied == 1);
  CHECK(n.active_blocklist_size == 1);
  CHECK(n.peak_load == 0.5);

  CHECK(s.overall.node_id == "all");
  CHECK(s.overall.total_flows == 2);
  CHECK(s.confusion.at(10, 10) == 1);
  CHECK(s.metrics.model == "m");
  CHECK(s.metrics.samples == 2);
  CHECK(s.metrics.accuracy == 1.0);
  CHECK(s.metrics.mean_cross_entropy == doctest::Approx(0.2));
  CHECK(s.metrics.energy_j_per_req.value() == doctest::Approx(0.3));
}

TEST_CASE("verdict counts add up to total flows") {
  std::vector<TelemetryEvent> ev;
  const Verdict all[] = {Verdict::Allow, Verdict::Deny, Verdict::Challenge, Verdict::RateLimited,
                         Verdict::RedirectHoneypot};
  for (int i = 0; i < 25; ++i) {
    ev.push_back(admission_event(i % 2 ? "a" : "b", 0, i, {all[i % 5], i % 3 ? 10 : 3, "x"}));
  }
  const MonitoringSnapshot s = aggregate(ev);
  CHECK(s.overall.verdicts.total() == s.overall.total_flows);
  CHECK(s.overall.benign.total() + s.overall.attack.total() == 25);
  for (const auto& n : s.nodes) CHECK(n.verdicts.total() == n.total_flows);
  CHECK(s.nodes[0].node_id == "b");
}

TEST_CASE("empty stream gives the zero snapshot") {
  const MonitoringSnapshot s = aggregate({});
  CHECK(s.nodes.empty());
  CHECK(s.overall.total_flows == 0);
  CHECK(s.metrics.samples == 0);
  CHECK(s.confusion.total() == 0);
  CHECK_FALSE(emit_report(s, ReportFormat::Text).empty());
  CHECK(snapshot_from_json(emit_report(s, ReportFormat::Json)) == s);
}

TEST_CASE("decreasing timestamps on one node") {
  auto ev = six_events();
  ev.insert(ev.begin() + 2, sample_event("n2", 0, 9.0, {}));  // other node may run ahead
  ev.push_back(sample_event("n1", 3, 2.5, {}));
  try {
    aggregate(ev);
    FAIL("accepted out-of-order events");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfOrderEvents);
    CHECK(e.subject() == "n1");
    CHECK(e.index() == std::optional<std::size_t>(7));
  }
}

TEST_CASE("actions before any attack are not mitigation") {
  std::vector<TelemetryEvent> ev = {
      action_event("n", 0, 1.0, {ActionSet{Action::Alert}, 13, 1}),
      admission_event("n", 1, 2.0, {Verdict::Allow, 10, "b"}),
      action_event("n", 2, 3.5, {ActionSet{Action::BlockIPs}, 10, 1}),
  };
  CHECK(aggregate(ev).nodes[0].detection_to_mitigation_s == std::optional<double>(1.5));
}

TEST_CASE("json lines round trip every kind") {
  auto ev = six_events();
  ev.push_back(detection_event("n1", 3, 4.0, {1, 2, 0.5, std::nullopt, std::nullopt}));
  ev.push_back(admission_event("n1", 3, 4.0, {Verdict::RedirectHoneypot, 3, "q"}));
  std::stringstream ss;
  write_events(ss, ev);
  CHECK(read_events(ss) == ev);
  CHECK(to_json_line(ev[0]) ==
        R"({"kind":"Admission","node":"n1","window":0,"ts":1.0,"verdict":"Allow","truth":3,)"
        R"("src_ip":"10.0.0.1"})");
  CHECK_THROWS_AS(parse_json_line(R"({"kind":"Nope"})"), Error);
}

TEST_CASE("stream sink over a pipe") {
  int fds[2];
  REQUIRE(::pipe(fds) == 0);
  std::vector<TelemetryEvent> got;
  std::thread reader([&] { got = collect_from_fd(fds[0]); });
  {
    StreamSink sink(fds[1]);
    for (const auto& e : six_events()) sink.publish(e);
  }
  ::close(fds[1]);
  reader.join();
  ::close(fds[0]);
  CHECK(got == six_events());
}

TEST_CASE("channel sink drains in publish order") {
  ChannelSink sink;
  for (const auto& e : six_events()) sink.publish(e);
  CHECK(sink.drain() == six_events());
  CHECK(sink.drain().empty());
}

TEST_CASE("json report re-parses to an equal snapshot") {
  const MonitoringSnapshot s = aggregate(six_events(), "m");
  const std::string json = emit_report(s, ReportFormat::Json);
  CHECK(snapshot_from_json(json) == s);
  CHECK(json.find("\"detection_to_mitigation_s\": 1.0") != std::string::npos);
}

TEST_CASE("text report shows the metrics row and the confusion matrix") {
  const std::string text = emit_report(aggregate(six_events(), "m"), ReportFormat::Text);
  CHECK(text.find("| m | - | - | 100.00% | 100.00% | 100.00% | 100.00% | 0.3000 | 2.00 |") !=
        std::string::npos);
  CHECK(text.find("Confusion matrix") != std::string::npos);
  CHECK(text.find("| n1 | 2 |") != std::string::npos);
}

TEST_CASE("report format names") {
  CHECK(parse_report_format("json") == ReportFormat::Json);
  CHECK(parse_report_format("text") == ReportFormat::Text);
  CHECK_THROWS_AS(parse_report_format("xml"), Error);
}
