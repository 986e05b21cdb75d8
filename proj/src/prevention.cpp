#include "edgeguard/prevention.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "edgeguard/error.hpp"
#include "edgeguard/taxonomy.hpp"

namespace edgeguard {

namespace {

constexpr std::array<std::string_view, kNumActions> kActionNames = {
    "RateLimiting",      "BlockIPs",           "RedirectTraffic",     "IPFiltering",
    "CaptchaDeployment", "AggressiveBlocking", "HoneypotRedirection", "Monitor",
    "Isolate",           "Alert"};

// Algorithm-style spellings.
constexpr std::array<std::string_view, kNumActions> kSnakeNames = {
    "rate_limiting",       "block_ips",           "redirect_traffic",     "ip_filtering",
    "captcha_deployment",  "aggressive_blocking", "honeypot_redirection", "monitor",
    "isolate",             "alert"};

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string_view to_string(Intensity i) {
  switch (i) {
    case Intensity::Low: return "Low";
    case Intensity::Moderate: return "Moderate";
    case Intensity::Extreme: return "Extreme";
  }
  return "Low";
}

std::string_view to_string(Action a) { return kActionNames[static_cast<std::size_t>(a)]; }

Action parse_action(std::string_view text) {
  const std::string l = lower(text);
  for (std::size_t i = 0; i < kNumActions; ++i) {
    if (l == lower(kActionNames[i]) || l == kSnakeNames[i]) return static_cast<Action>(i);
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown action '" + std::string(text) + "'",
              std::string(text));
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Allow: return "Allow";
    case Verdict::Deny: return "Deny";
    case Verdict::Challenge: return "Challenge";
    case Verdict::RedirectHoneypot: return "RedirectHoneypot";
    case Verdict::RateLimited: return "RateLimited";
  }
  return "Allow";
}

ActionSet::ActionSet(std::initializer_list<Action> actions) {
  for (Action a : actions) add(a);
}

ActionSet& ActionSet::add(Action a) {
  bits_ = static_cast<std::uint16_t>(bits_ | (1u << static_cast<unsigned>(a)));
  return *this;
}

std::size_t ActionSet::size() const { return static_cast<std::size_t>(std::popcount(bits_)); }

std::vector<Action> ActionSet::items() const {
  std::vector<Action> out;
  for (std::size_t i = 0; i < kNumActions; ++i) {
    if (contains(static_cast<Action>(i))) out.push_back(static_cast<Action>(i));
  }
  return out;
}

std::vector<std::string> ActionSet::names() const {
  std::vector<std::string> out;
  for (Action a : items()) out.emplace_back(to_string(a));
  return out;
}

std::string ActionSet::str() const {
  std::string s;
  for (Action a : items()) {
    if (!s.empty()) s.push_back(',');
    s += to_string(a);
  }
  return s;
}

const ActionSet& ddos_action_universe() {
  static const ActionSet u{Action::RateLimiting,      Action::BlockIPs,
                           Action::RedirectTraffic,   Action::IPFiltering,
                           Action::CaptchaDeployment, Action::AggressiveBlocking,
                           Action::HoneypotRedirection};
  return u;
}

void PreventionThresholds::validate() const {
  if (!(theta_moderate > 0.0 && theta_moderate < theta_extreme)) {
    throw Error(ErrorCode::ConfigInvalid, "need 0 < theta_moderate < theta_extreme");
  }
  if (n_botnet < 2) throw Error(ErrorCode::ConfigInvalid, "n_botnet must be at least 2");
  if (!(load_max > 0.0 && load_max <= 1.0)) {
    throw Error(ErrorCode::ConfigInvalid, "load_max must be in (0, 1]");
  }
  if (!(duration_max > 0.0)) throw Error(ErrorCode::ConfigInvalid, "duration_max must be > 0");
}

Intensity quantize_intensity(double raw, const PreventionThresholds& th) {
  if (raw >= th.theta_extreme) return Intensity::Extreme;
  if (raw >= th.theta_moderate) return Intensity::Moderate;
  return Intensity::Low;
}

AttackContext characterize(std::span<const ObservedFlow> window, const WindowInfo& info,
                           const PreventionThresholds& th) {
  if (window.empty()) throw Error(ErrorCode::EmptyWindow, "window has no flows");
  if (!(info.window_seconds > 0.0)) {
    throw Error(ErrorCode::ConfigInvalid, "window_seconds must be positive");
  }
  if (!(info.system_load >= 0.0 && info.system_load <= 1.0)) {
    throw Error(ErrorCode::OutOfRange, "system load must be in [0, 1]");
  }
  if (info.now < info.attack_start) {
    throw Error(ErrorCode::OutOfRange, "attack_start lies after now");
  }

  std::array<std::size_t, kNumClasses + 1> votes{};
  std::size_t malicious = 0;
  AttackContext ctx;
  for (std::size_t i = 0; i < window.size(); ++i) {
    const ObservedFlow& o = window[i];
    if (!o.flow.src_ip) {
      throw Error(ErrorCode::MissingSourceIp, "record " + std::to_string(i) + " has no src_ip",
                  {}, i);
    }
    if (o.predicted < 1 || o.predicted > kNumClasses) {
      throw Error(ErrorCode::UnknownClass, "prediction outside 1..21",
                  std::to_string(o.predicted), i);
    }
    if (o.predicted == kBenignLabel) continue;
    ++malicious;
    ++votes[static_cast<std::size_t>(o.predicted)];
    ctx.source_ips.insert(*o.flow.src_ip);
  }

  ctx.attack_type = kBenignLabel;
  std::size_t best = 0;
  for (int label = 1; label <= kNumClasses; ++label) {
    if (votes[static_cast<std::size_t>(label)] > best) {
      best = votes[static_cast<std::size_t>(label)];
      ctx.attack_type = label;
    }
  }
  ctx.intensity_raw = static_cast<double>(malicious) / info.window_seconds;
  ctx.intensity = quantize_intensity(ctx.intensity_raw, th);
  ctx.system_load = info.system_load;
  ctx.duration_seconds = info.now - info.attack_start;
  ctx.window_id = info.window_id;
  return ctx;
}

ActionSet decide(const AttackContext& ctx, const PreventionThresholds& th) {
  ActionSet a;
  if (ctx.attack_type != kDdosLabel) return a;

  if (ctx.intensity == Intensity::Moderate) {
    a.add(Action::RateLimiting);
  } else if (ctx.intensity == Intensity::Extreme) {
    a.add(Action::BlockIPs).add(Action::RedirectTraffic);
  }

  if (ctx.source_ips.size() <= th.n_botnet) {
    a.add(Action::IPFiltering);
  } else {
    a.add(Action::CaptchaDeployment);
  }

  if (ctx.system_load > th.load_max) a.add(Action::AggressiveBlocking);
  if (ctx.duration_seconds > th.duration_max) a.add(Action::HoneypotRedirection);
  return a;
}

Playbook Playbook::defaults() {
  Playbook p;
  p.set(kBenignLabel, {});
  p.set(19, {Action::Isolate, Action::Alert});  // Ransomware
  p.set(2, {Action::Isolate, Action::Alert});   // Backdoor
  p.set(20, {Action::Monitor});                 // Scanning
  p.set(17, {Action::Monitor});                 // PartOfAHorizontalPortScan
  p.set_fallback({Action::Alert});
  return p;
}

ActionSet Playbook::lookup(int label) const {
  if (!Taxonomy::builtin().contains_label(label)) {
    throw Error(ErrorCode::UnknownClass, "unknown label id " + std::to_string(label),
                std::to_string(label));
  }
  auto it = table_.find(label);
  return it == table_.end() ? fallback_ : it->second;
}

void EdgeState::block(const std::string& ip, double until) {
  auto [it, inserted] = blocklist_.emplace(ip, until);
  if (!inserted) it->second = std::max(it->second, until);
  captcha_pending_.erase(ip);
}

void EdgeState::apply(const ActionSet& actions, const AttackContext& ctx, double now) {
  if (!log_.empty() && ctx.window_id < log_.back().window_id) {
    throw Error(ErrorCode::OutOfOrderWindow,
                "window " + std::to_string(ctx.window_id) + " precedes logged window " +
                    std::to_string(log_.back().window_id));
  }
  const auto& sources = ctx.source_ips;

  if (actions.contains(Action::BlockIPs) || actions.contains(Action::IPFiltering)) {
    for (const auto& ip : sources) block(ip, now + config_.standard_expiry);
  }
  if (actions.contains(Action::AggressiveBlocking)) {
    for (const auto& ip : sources) {
      block(ip, now + config_.aggressive_expiry);
      rate_limits_.erase(ip);
    }
  }
  if (actions.contains(Action::RateLimiting) && !actions.contains(Action::AggressiveBlocking)) {
    for (const auto& ip : sources) {
      auto& budget = rate_limits_[ip];
      if (budget.tokens_per_sec != config_.rate_limit_per_sec) {
        budget = RateBudget{config_.rate_limit_per_sec, -1, 0.0};
      }
    }
  }
  if (actions.contains(Action::CaptchaDeployment)) {
    for (const auto& ip : sources) {
      if (!is_blocked(ip, now)) captcha_pending_.insert(ip);
    }
  }
  if (actions.contains(Action::HoneypotRedirection) || actions.contains(Action::RedirectTraffic)) {
    honeypot_.insert(sources.begin(), sources.end());
  }
  if (actions.contains(Action::Isolate)) {
    for (const auto& ip : sources) {
      auto it = config_.device_of_ip.find(ip);
      isolated_.insert(it == config_.device_of_ip.end() ? ip : it->second);
    }
  }
  if (actions.contains(Action::Monitor)) monitored_.insert(sources.begin(), sources.end());

  ActionLogEntry entry{ctx.window_id, actions, ctx.attack_type, sources.size(), now};
  if (log_.empty() || !(log_.back() == entry)) log_.push_back(entry);
}

bool EdgeState::is_blocked(const std::string& ip, double now) const {
  auto it = blocklist_.find(ip);
  return it != blocklist_.end() && now < it->second;
}

std::size_t EdgeState::active_blocks(double now) const {
  return static_cast<std::size_t>(std::count_if(blocklist_.begin(), blocklist_.end(),
                                                [&](const auto& kv) { return now < kv.second; }));
}

Verdict EdgeState::admit(const FlowRecord& flow, double now) {
  if (!flow.src_ip) throw Error(ErrorCode::MissingSourceIp, "flow has no src_ip");
  const std::string& ip = *flow.src_ip;

  if (auto it = blocklist_.find(ip); it != blocklist_.end()) {
    if (now < it->second) return Verdict::Deny;
    blocklist_.erase(it);
  }
  if (!isolated_.empty()) {
    auto dev = config_.device_of_ip.find(ip);
    if (isolated_.count(dev == config_.device_of_ip.end() ? ip : dev->second) > 0) {
      return Verdict::Deny;
    }
  }
  if (honeypot_.count(ip) > 0) return Verdict::RedirectHoneypot;
  if (captcha_pending_.count(ip) > 0) return Verdict::Challenge;
  if (auto it = rate_limits_.find(ip); it != rate_limits_.end()) {
    RateBudget& b = it->second;
    const auto second = static_cast<std::int64_t>(std::floor(now));
    if (second != b.second) {
      b.second = second;
      b.used = 0.0;
    }
    if (b.used + 1.0 > b.tokens_per_sec) return Verdict::RateLimited;
    b.used += 1.0;
  }
  return Verdict::Allow;
}

void EdgeState::resolve_challenge(const std::string& ip, bool solved, double now) {
  if (captcha_pending_.erase(ip) == 0) return;
  if (!solved) block(ip, now + config_.standard_expiry);
}

EdgeState apply(const ActionSet& actions, const AttackContext& ctx, EdgeState state, double now) {
  state.apply(actions, ctx, now);
  return state;
}

void export_action_log(std::ostream& out, std::span<const ActionLogEntry> log,
                       std::string_view node_id) {
  for (const auto& e : log) {
    nlohmann::ordered_json j;
    if (!node_id.empty()) j["node"] = node_id;
    j["window_id"] = e.window_id;
    j["timestamp"] = e.timestamp;
    j["attack_type"] = e.attack_type;
    j["actions"] = e.actions.names();
    j["source_count"] = e.source_count;
    out << j.dump() << '\n';
  }
}

namespace {

ActionSet action_set_from_json(const nlohmann::json& j) {
  ActionSet s;
  for (const auto& a : j) s.add(parse_action(a.get<std::string>()));
  return s;
}

}  // namespace

PreventionConfig load_prevention_config(std::istream& in) {
  PreventionConfig cfg;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    if (j.contains("thresholds")) {
      const auto& t = j["thresholds"];
      auto& th = cfg.thresholds;
      th.theta_moderate = t.value("theta_moderate", th.theta_moderate);
      th.theta_extreme = t.value("theta_extreme", th.theta_extreme);
      th.n_botnet = t.value("n_botnet", th.n_botnet);
      th.load_max = t.value("load_max", th.load_max);
      th.duration_max = t.value("duration_max", th.duration_max);
    }
    if (j.contains("enforcement")) {
      const auto& e = j["enforcement"];
      auto& en = cfg.enforcement;
      en.standard_expiry = e.value("standard_expiry", en.standard_expiry);
      en.aggressive_expiry = e.value("aggressive_expiry", en.aggressive_expiry);
      en.rate_limit_per_sec = e.value("rate_limit_per_sec", en.rate_limit_per_sec);
      if (e.contains("device_of_ip")) {
        en.device_of_ip = e["device_of_ip"].get<std::map<std::string, std::string>>();
      }
    }
    if (j.contains("playbook")) {
      const Taxonomy& tax = Taxonomy::builtin();
      for (const auto& [key, value] : j["playbook"].items()) {
        if (key == "default") {
          cfg.playbook.set_fallback(action_set_from_json(value));
        } else {
          cfg.playbook.set(tax.resolve_label(key), action_set_from_json(value));
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("prevention config: ") + e.what());
  }
  cfg.thresholds.validate();
  return cfg;
}

}  // namespace edgeguard
