#include <doctest.h>

#include <sstream>

#include "edgeguard/error.hpp"
#include "edgeguard/prevention.hpp"
#include "edgeguard/taxonomy.hpp"

using namespace edgeguard;

namespace {

ObservedFlow observed(const std::string& ip, int predicted) {
  ObservedFlow o;
  o.flow.src_ip = ip;
  o.predicted = predicted;
  return o;
}

AttackContext ddos(std::size_t sources, Intensity intensity, double load = 0.1,
                   double duration = 1.0, std::int64_t window = 0) {
  AttackContext c;
  c.attack_type = kDdosLabel;
  c.intensity = intensity;
  for (std::size_t i = 0; i < sources; ++i) c.source_ips.insert("172.16.0." + std::to_string(i));
  c.system_load = load;
  c.duration_seconds = duration;
  c.window_id = window;
  return c;
}

FlowRecord from(const std::string& ip) {
  FlowRecord f;
  f.src_ip = ip;
  return f;
}

}  // namespace

TEST_CASE("intensity boundaries are inclusive") {
  const PreventionThresholds th;
  CHECK(quantize_intensity(49.999, th) == Intensity::Low);
  CHECK(quantize_intensity(50.0, th) == Intensity::Moderate);
  CHECK(quantize_intensity(499.0, th) == Intensity::Moderate);
  CHECK(quantize_intensity(500.0, th) == Intensity::Extreme);
}

TEST_CASE("characterize summarizes a window") {
  std::vector<ObservedFlow> w = {observed("a", 10), observed("b", 10), observed("a", 10),
                                 observed("c", 17), observed("d", 3)};
  WindowInfo info{0.5, 0.3, 2.0, 5.0, 4};
  const AttackContext c = characterize(w, info, PreventionThresholds{});
  CHECK(c.attack_type == 10);
  CHECK(c.intensity_raw == 8.0);  // 4 malicious over half a second
  CHECK(c.source_ips == std::set<std::string>{"a", "b", "c"});
  CHECK(c.duration_seconds == 3.0);
  CHECK(c.window_id == 4);
}

TEST_CASE("characterize ties go to the lower label and benign windows stay benign") {
  std::vector<ObservedFlow> w = {observed("a", 17), observed("b", 10)};
  CHECK(characterize(w, WindowInfo{}, PreventionThresholds{}).attack_type == 10);
  std::vector<ObservedFlow> calm = {observed("a", 3)};
  const AttackContext c = characterize(calm, WindowInfo{}, PreventionThresholds{});
  CHECK(c.attack_type == 3);
  CHECK(c.source_ips.empty());
}

TEST_CASE("characterize errors") {
  std::vector<ObservedFlow> none;
  try {
    characterize(none, WindowInfo{}, PreventionThresholds{});
    FAIL("empty window");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyWindow);
  }
  std::vector<ObservedFlow> w = {observed("a", 10), ObservedFlow{}};
  try {
    characterize(w, WindowInfo{}, PreventionThresholds{});
    FAIL("missing ip");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingSourceIp);
    CHECK(e.index() == std::optional<std::size_t>(1));
  }
}

TEST_CASE("decide source cardinality boundary") {
  const PreventionThresholds th;
  CHECK(decide(ddos(10, Intensity::Low), th) == ActionSet{Action::IPFiltering});
  CHECK(decide(ddos(11, Intensity::Low), th) == ActionSet{Action::CaptchaDeployment});
}

TEST_CASE("decide load and duration are strict") {
  const PreventionThresholds th;
  CHECK_FALSE(decide(ddos(1, Intensity::Low, 0.8), th).contains(Action::AggressiveBlocking));
  CHECK(decide(ddos(1, Intensity::Low, 0.81), th).contains(Action::AggressiveBlocking));
  CHECK_FALSE(decide(ddos(1, Intensity::Low, 0.1, 60.0), th).contains(Action::HoneypotRedirection));
  CHECK(decide(ddos(1, Intensity::Low, 0.1, 60.5), th).contains(Action::HoneypotRedirection));
}

TEST_CASE("decide ignores other classes") {
  AttackContext c = ddos(100, Intensity::Extreme, 1.0, 1000.0);
  c.attack_type = 20;
  CHECK(decide(c, PreventionThresholds{}).empty());
}

TEST_CASE("decide output stays inside the DDoS action universe") {
  for (auto in : {Intensity::Low, Intensity::Moderate, Intensity::Extreme}) {
    for (std::size_t s : {1u, 50u}) {
      const ActionSet a = decide(ddos(s, in, 0.95, 100.0), PreventionThresholds{});
      CHECK((a | ddos_action_universe()) == ddos_action_universe());
    }
  }
}

TEST_CASE("action names") {
  CHECK(parse_action("block_IPs") == Action::BlockIPs);
  CHECK(parse_action("CAPTCHA_deployment") == Action::CaptchaDeployment);
  CHECK(parse_action("HoneypotRedirection") == Action::HoneypotRedirection);
  CHECK_THROWS_AS(parse_action("nuke"), Error);
  const ActionSet s{Action::RedirectTraffic, Action::BlockIPs};
  CHECK(s.str() == "BlockIPs,RedirectTraffic");
  CHECK(s.size() == 2);
}

TEST_CASE("threshold validation") {
  PreventionThresholds th;
  th.theta_moderate = 600.0;
  CHECK_THROWS_AS(th.validate(), Error);
  th = {};
  th.load_max = 1.5;
  CHECK_THROWS_AS(th.validate(), Error);
  th = {};
  CHECK_NOTHROW(th.validate());
}

TEST_CASE("playbook defaults") {
  const Playbook p = Playbook::defaults();
  CHECK(p.lookup(3).empty());
  CHECK(p.lookup(19) == (ActionSet{Action::Isolate, Action::Alert}));
  CHECK(p.lookup(17) == ActionSet{Action::Monitor});
  CHECK(p.lookup(21) == ActionSet{Action::Alert});
  CHECK_THROWS_AS(p.lookup(22), Error);
}

TEST_CASE("blocked sources are denied until expiry") {
  EdgeState s;
  const AttackContext c = ddos(3, Intensity::Extreme);
  s.apply({Action::BlockIPs}, c, 10.0);
  CHECK(s.admit(from("172.16.0.1"), 11.0) == Verdict::Deny);
  CHECK(s.admit(from("10.0.0.1"), 11.0) == Verdict::Allow);
  CHECK(s.active_blocks(11.0) == 3);
  CHECK(s.admit(from("172.16.0.1"), 310.0) == Verdict::Allow);
  CHECK(s.blocklist().count("172.16.0.1") == 0);
}

TEST_CASE("aggressive blocking outlasts the standard expiry") {
  EdgeState s;
  s.apply({Action::BlockIPs, Action::AggressiveBlocking}, ddos(1, Intensity::Extreme), 0.0);
  CHECK(s.admit(from("172.16.0.0"), 1000.0) == Verdict::Deny);
  CHECK(s.admit(from("172.16.0.0"), 3600.0) == Verdict::Allow);
}

TEST_CASE("rate limiting admits five flows per second") {
  EdgeState s;
  s.apply({Action::RateLimiting}, ddos(1, Intensity::Moderate), 0.0);
  int allowed = 0;
  for (int i = 0; i < 20; ++i) allowed += s.admit(from("172.16.0.0"), 1.0 + i * 0.01) == Verdict::Allow;
  CHECK(allowed == 5);
  CHECK(s.admit(from("172.16.0.0"), 2.0) == Verdict::Allow);
}

TEST_CASE("captcha: solve clears, failure blocks") {
  EdgeState s;
  s.apply({Action::CaptchaDeployment}, ddos(2, Intensity::Low), 0.0);
  CHECK(s.admit(from("172.16.0.0"), 1.0) == Verdict::Challenge);
  s.resolve_challenge("172.16.0.0", true, 1.0);
  CHECK(s.admit(from("172.16.0.0"), 1.5) == Verdict::Allow);
  s.resolve_challenge("172.16.0.1", false, 1.0);
  CHECK(s.admit(from("172.16.0.1"), 1.5) == Verdict::Deny);
}

TEST_CASE("honeypot redirection and isolation") {
  EnforcementConfig cfg;
  cfg.device_of_ip = {{"172.16.0.0", "cam-1"}, {"172.16.0.9", "cam-1"}};
  EdgeState s(cfg);
  s.apply({Action::HoneypotRedirection}, ddos(2, Intensity::Low), 0.0);
  CHECK(s.admit(from("172.16.0.1"), 1.0) == Verdict::RedirectHoneypot);
  AttackContext c = ddos(1, Intensity::Low, 0.1, 1.0, 1);
  c.attack_type = 19;
  s.apply({Action::Isolate, Action::Alert}, c, 2.0);
  CHECK(s.isolated_devices().count("cam-1") == 1);
  CHECK(s.admit(from("172.16.0.9"), 3.0) == Verdict::Deny);  // same device, other IP
}

TEST_CASE("apply is idempotent and ordered") {
  const AttackContext c = ddos(50, Intensity::Extreme, 0.2, 1.0, 7);
  const ActionSet a{Action::BlockIPs, Action::RedirectTraffic, Action::CaptchaDeployment};
  const EdgeState once = apply(a, c, EdgeState{}, 8.0);
  const EdgeState twice = apply(a, c, once, 8.0);
  CHECK(once == twice);
  CHECK(once.action_log().size() == 1);

  AttackContext earlier = c;
  earlier.window_id = 6;
  EdgeState s = once;
  try {
    s.apply(a, earlier, 9.0);
    FAIL("out of order window accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfOrderWindow);
  }
}

TEST_CASE("admit requires a source ip") {
  EdgeState s;
  try {
    s.admit(FlowRecord{}, 0.0);
    FAIL("no ip accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingSourceIp);
  }
}

TEST_CASE("action log export") {
  EdgeState s;
  s.apply({Action::BlockIPs}, ddos(2, Intensity::Extreme, 0.1, 1.0, 3), 4.0);
  std::ostringstream out;
  export_action_log(out, s.action_log(), "edge-1");
  CHECK(out.str() ==
        "{\"node\":\"edge-1\",\"window_id\":3,\"timestamp\":4.0,\"attack_type\":10,"
        "\"actions\":[\"BlockIPs\"],\"source_count\":2}\n");
}

TEST_CASE("prevention config file") {
  std::istringstream in(R"({"thresholds": {"theta_moderate": 20, "theta_extreme": 200},
                            "enforcement": {"rate_limit_per_sec": 2},
                            "playbook": {"Scanning": ["Alert"], "default": []}})");
  const PreventionConfig cfg = load_prevention_config(in);
  CHECK(cfg.thresholds.theta_moderate == 20.0);
  CHECK(cfg.thresholds.n_botnet == 10);
  CHECK(cfg.enforcement.rate_limit_per_sec == 2.0);
  CHECK(cfg.playbook.lookup(20) == ActionSet{Action::Alert});
  CHECK(cfg.playbook.lookup(21).empty());

  std::istringstream bad(R"({"thresholds": {"theta_moderate": 900}})");
  try {
    load_prevention_config(bad);
    FAIL("invalid thresholds accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigInvalid);
  }
}
