#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edgeguard/flow.hpp"

namespace edgeguard {

enum class Intensity { Low, Moderate, Extreme };

std::string_view to_string(Intensity i);

enum class Action : std::uint8_t {
  RateLimiting,
  BlockIPs,
  RedirectTraffic,
  IPFiltering,
  CaptchaDeployment,
  AggressiveBlocking,
  HoneypotRedirection,
  Monitor,
  Isolate,
  Alert,
};

inline constexpr std::size_t kNumActions = 10;

std::string_view to_string(Action a);
/// Accepts the enum spelling ("BlockIPs") and the snake-case spelling
/// ("block_IPs", "ip_filtering", case-insensitive). Throws ConfigInvalid.
Action parse_action(std::string_view text);

/// Small ordered set over Action.
class ActionSet {
 public:
  ActionSet() = default;
  ActionSet(std::initializer_list<Action> actions);

  ActionSet& add(Action a);
  bool contains(Action a) const { return (bits_ >> static_cast<unsigned>(a)) & 1u; }
  bool empty() const { return bits_ == 0; }
  std::size_t size() const;
  std::vector<Action> items() const;
  std::vector<std::string> names() const;
  /// Comma-joined names, "" for the empty set.
  std::string str() const;

  ActionSet& operator|=(const ActionSet& o) {
    bits_ |= o.bits_;
    return *this;
  }
  friend ActionSet operator|(ActionSet a, const ActionSet& b) { return a |= b; }
  friend bool operator==(const ActionSet&, const ActionSet&) = default;

 private:
  std::uint16_t bits_ = 0;
};

/// The seven actions the DDoS decision procedure can emit.
const ActionSet& ddos_action_universe();

struct PreventionThresholds {
  double theta_moderate = 50.0;  // flows/s
  double theta_extreme = 500.0;  // flows/s
  std::size_t n_botnet = 10;     // |sources| above this counts as a botnet
  double load_max = 0.8;
  double duration_max = 60.0;    // seconds

  /// Throws ConfigInvalid unless 0 < theta_moderate < theta_extreme,
  /// n_botnet >= 2, 0 < load_max <= 1 and duration_max > 0.
  void validate() const;
  friend bool operator==(const PreventionThresholds&, const PreventionThresholds&) = default;
};

struct AttackContext {
  int attack_type = 3;
  Intensity intensity = Intensity::Low;
  double intensity_raw = 0.0;
  std::set<std::string> source_ips;
  double system_load = 0.0;
  double duration_seconds = 0.0;
  std::int64_t window_id = 0;
};

/// raw >= theta_extreme -> Extreme, raw >= theta_moderate -> Moderate, else Low.
Intensity quantize_intensity(double raw, const PreventionThresholds& th);

struct ObservedFlow {
  FlowRecord flow;
  int predicted = 0;
};

struct WindowInfo {
  double window_seconds = 1.0;
  double system_load = 0.0;
  double attack_start = 0.0;  // time the current attack episode began
  double now = 0.0;
  std::int64_t window_id = 0;
};

/// Summarizes one window of classified flows. Malicious means predicted
/// label != 3. attack_type is the most frequent malicious label (ties: lowest
/// id; 3 when nothing is malicious); intensity_raw = malicious count /
/// window_seconds; source_ips = distinct src_ip of malicious flows;
/// duration = now - attack_start.
/// Throws EmptyWindow, and MissingSourceIp(index) when a record has no src_ip.
AttackContext characterize(std::span<const ObservedFlow> window, const WindowInfo& info,
                           const PreventionThresholds& th);

/// DDoS decision table. Empty unless attack_type is DDoS (label 10); then
/// four independent groups contribute:
///   intensity   Moderate -> RateLimiting, Extreme -> BlockIPs + RedirectTraffic
///   sources     |S| <= n_botnet -> IPFiltering, else CaptchaDeployment
///   load        > load_max -> AggressiveBlocking
///   duration    > duration_max -> HoneypotRedirection
ActionSet decide(const AttackContext& ctx, const PreventionThresholds& th);

/// Response table for detected classes other than DDoS.
class Playbook {
 public:
  /// Ransomware and Backdoor -> {Isolate, Alert}; Scanning and horizontal
  /// port scans -> {Monitor}; benign -> {}; any other class -> {Alert}.
  static Playbook defaults();

  void set(int label, ActionSet actions) { table_[label] = actions; }
  void set_fallback(ActionSet actions) { fallback_ = actions; }

  /// Throws UnknownClass for labels outside the canonical taxonomy.
  ActionSet lookup(int label) const;

 private:
  std::map<int, ActionSet> table_;
  ActionSet fallback_;
};

struct EnforcementConfig {
  double standard_expiry = 300.0;     // seconds
  double aggressive_expiry = 3600.0;  // seconds
  double rate_limit_per_sec = 5.0;    // flows per source per second
  std::map<std::string, std::string> device_of_ip;  // for Isolate; default: the IP
  friend bool operator==(const EnforcementConfig&, const EnforcementConfig&) = default;
};

enum class Verdict { Allow, Deny, Challenge, RedirectHoneypot, RateLimited };

std::string_view to_string(Verdict v);

struct ActionLogEntry {
  std::int64_t window_id = 0;
  ActionSet actions;
  int attack_type = 0;
  std::size_t source_count = 0;
  double timestamp = 0.0;
  friend bool operator==(const ActionLogEntry&, const ActionLogEntry&) = default;
};

/// Enforcement state of one edge node. Owned and mutated by a single task.
class EdgeState {
 public:
  struct RateBudget {
    double tokens_per_sec = 0.0;
    std::int64_t second = -1;  // second the counter below belongs to
    double used = 0.0;
    friend bool operator==(const RateBudget&, const RateBudget&) = default;
  };

  explicit EdgeState(EnforcementConfig config = {}) : config_(std::move(config)) {}

  /// Realizes an action set against ctx.source_ips and logs it. Applying the
  /// same set for the same window twice leaves the state as after once.
  /// Throws OutOfOrderWindow if ctx.window_id precedes the last logged window.
  void apply(const ActionSet& actions, const AttackContext& ctx, double now);

  /// Precedence: Deny (unexpired block or isolated device) > RedirectHoneypot
  /// > Challenge > RateLimited > Allow. Expired blocks are evicted here.
  /// Throws MissingSourceIp.
  Verdict admit(const FlowRecord& flow, double now);

  /// Outcome of a CAPTCHA: solved clears the challenge, failed blocks the
  /// source with the standard expiry.
  void resolve_challenge(const std::string& ip, bool solved, double now);

  const std::map<std::string, double>& blocklist() const noexcept { return blocklist_; }
  const std::map<std::string, RateBudget>& rate_limits() const noexcept { return rate_limits_; }
  const std::set<std::string>& captcha_pending() const noexcept { return captcha_pending_; }
  const std::set<std::string>& honeypot_redirects() const noexcept { return honeypot_; }
  const std::set<std::string>& isolated_devices() const noexcept { return isolated_; }
  const std::set<std::string>& monitored() const noexcept { return monitored_; }
  const std::vector<ActionLogEntry>& action_log() const noexcept { return log_; }
  const EnforcementConfig& config() const noexcept { return config_; }

  std::size_t active_blocks(double now) const;
  bool is_blocked(const std::string& ip, double now) const;

  friend bool operator==(const EdgeState&, const EdgeState&) = default;

 private:
  void block(const std::string& ip, double until);

  EnforcementConfig config_;
  std::map<std::string, double> blocklist_;  // ip -> expiry
  std::map<std::string, RateBudget> rate_limits_;
  std::set<std::string> captcha_pending_;
  std::set<std::string> honeypot_;
  std::set<std::string> isolated_;
  std::set<std::string> monitored_;
  std::vector<ActionLogEntry> log_;
};

/// Value-returning form of EdgeState::apply.
EdgeState apply(const ActionSet& actions, const AttackContext& ctx, EdgeState state, double now);

/// One JSON object per line: window_id, timestamp, attack_type, actions,
/// source_count.
void export_action_log(std::ostream& out, std::span<const ActionLogEntry> log,
                       std::string_view node_id = {});

struct PreventionConfig {
  PreventionThresholds thresholds;
  EnforcementConfig enforcement;
  Playbook playbook = Playbook::defaults();
};

/// JSON document with optional "thresholds", "enforcement" and "playbook"
/// objects; playbook keys are label ids, class names or "default".
PreventionConfig load_prevention_config(std::istream& in);

}  // namespace edgeguard
