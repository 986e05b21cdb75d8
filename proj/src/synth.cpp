#include "edgeguard/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "edgeguard/error.hpp"

namespace edgeguard {

namespace {

ClassProfile make(int label, std::string variant, std::string protocol,
                  std::vector<std::string> services, std::vector<std::string> states,
                  std::vector<std::uint16_t> ports, IntRange ob, IntRange rb, IntRange op,
                  IntRange rp, RealRange dur, std::uint64_t pool = 8) {
  ClassProfile p;
  p.label = label;
  p.variant = std::move(variant);
  p.header_bytes = protocol == "UDP" ? 28 : 40;
  p.protocol = std::move(protocol);
  p.services = std::move(services);
  p.conn_states = std::move(states);
  p.dst_ports = std::move(ports);
  p.orig_bytes = ob;
  p.resp_bytes = rb;
  p.orig_pkts = op;
  p.resp_pkts = rp;
  p.duration = dur;
  p.source_pool = pool;
  return p;
}

// Each class occupies its own region of (protocol, service, state, port,
// byte/packet ranges); classes sharing a port have disjoint byte ranges.
ProfileSet builtin_profiles() {
  ProfileSet s;
  s.version = 1;
  auto& v = s.profiles;
  v.push_back(make(1, "telnet_attack", "TCP", {"-"}, {"RSTO"}, {23}, {20, 80}, {0, 40}, {3, 6},
                   {1, 3}, {0.5, 3.0}));
  v.push_back(make(2, "reverse_shell", "TCP", {"-"}, {"SF"}, {4444, 31337}, {500, 2000},
                   {2000, 8000}, {10, 30}, {10, 30}, {10.0, 100.0}));
  v.push_back(make(3, "smart_camera", "TCP", {"-"}, {"SF"}, {554}, {200000, 2000000},
                   {1500, 20000}, {200, 2000}, {50, 400}, {10.0, 120.0}, 16));
  v.push_back(make(3, "industrial_sensor", "TCP", {"modbus"}, {"SF"}, {502}, {12, 60}, {9, 60},
                   {2, 4}, {2, 4}, {0.01, 0.5}, 16));
  v.push_back(make(3, "smart_meter", "TCP", {"-"}, {"SF"}, {1883}, {50, 240}, {4, 50}, {2, 6},
                   {2, 6}, {0.1, 2.0}, 16));
  v.push_back(make(3, "dns_lookup", "UDP", {"dns"}, {"SF"}, {53}, {30, 60}, {60, 150}, {1, 1},
                   {1, 1}, {0.001, 0.1}, 16));
  v.push_back(make(4, "irc_channel", "TCP", {"irc"}, {"SF"}, {6667}, {100, 400}, {100, 400},
                   {4, 10}, {4, 10}, {1.0, 30.0}));
  v.push_back(make(5, "heartbeat", "TCP", {"-"}, {"SF"}, {6697}, {1, 16}, {1, 16}, {1, 2},
                   {1, 2}, {0.0, 0.2}));
  v.push_back(make(6, "cc_download", "TCP", {"http"}, {"SF"}, {80}, {100, 290}, {50000, 500000},
                   {5, 20}, {40, 400}, {0.5, 10.0}));
  v.push_back(make(7, "heartbeat_download", "TCP", {"http"}, {"SF"}, {8080}, {100, 300},
                   {20000, 200000}, {5, 20}, {20, 200}, {0.5, 5.0}));
  v.push_back(make(8, "mirai_cc", "TCP", {"-"}, {"SF"}, {48101}, {20, 120}, {0, 60}, {2, 6},
                   {1, 4}, {0.5, 20.0}));
  v.push_back(make(9, "torii_cc", "TCP", {"ssl"}, {"SF"}, {443}, {400, 3000}, {300, 3000},
                   {5, 20}, {5, 20}, {30.0, 300.0}));
  v.push_back(make(10, "syn_flood", "TCP", {"-"}, {"S0"}, {80}, {0, 0}, {0, 0}, {1, 2}, {0, 0},
                   {0.0, 0.0009}, 500));
  v.push_back(make(11, "http_flood", "TCP", {"http"}, {"SF"}, {80}, {10000, 60000}, {0, 1000},
                   {50, 200}, {5, 40}, {5.0, 120.0}, 2));
  v.push_back(make(12, "bulk_download", "TCP", {"ssl"}, {"SF"}, {443}, {200, 1000},
                   {1000000, 10000000}, {20, 100}, {700, 7000}, {5.0, 60.0}));
  v.push_back(make(13, "sql_injection", "TCP", {"http"}, {"SF"}, {80}, {300, 900}, {200, 1000},
                   {3, 8}, {3, 8}, {0.01, 1.0}));
  v.push_back(make(14, "dns_spoof", "UDP", {"dns"}, {"SF"}, {53}, {30, 60}, {300, 600}, {1, 1},
                   {1, 2}, {0.001, 0.1}, 2));
  v.push_back(make(15, "okiru_probe", "TCP", {"-"}, {"S0"}, {37215}, {0, 0}, {0, 0}, {1, 3},
                   {0, 0}, {0.0, 3.0}, 64));
  v.push_back(make(16, "okiru_exploit", "TCP", {"http"}, {"SF"}, {37215}, {800, 1500}, {100, 600},
                   {3, 8}, {2, 6}, {0.1, 3.0}, 16));
  v.push_back(make(17, "horizontal_scan", "TCP", {"-"}, {"S0"}, {23, 2323}, {0, 0}, {0, 0},
                   {1, 3}, {0, 0}, {0.0, 3.0}, 64));
  v.push_back(make(18, "ssh_bruteforce", "TCP", {"ssh"}, {"SF"}, {22}, {1000, 3000},
                   {1500, 4000}, {15, 40}, {15, 40}, {1.0, 10.0}, 4));
  v.push_back(make(19, "smb_encrypt", "TCP", {"smb"}, {"SF"}, {445}, {100000, 5000000},
                   {1000, 50000}, {100, 4000}, {20, 1000}, {10.0, 300.0}, 2));
  ClassProfile scan = make(20, "port_sweep", "TCP", {"-"}, {"REJ"}, {}, {0, 0}, {0, 0}, {1, 1},
                           {1, 1}, {0.0, 0.01}, 4);
  scan.dst_port_range = {1, 65535};
  v.push_back(scan);
  v.push_back(make(21, "reflected_xss", "TCP", {"http"}, {"SF"}, {80}, {1000, 5000},
                   {1000, 5000}, {4, 10}, {4, 10}, {0.05, 2.0}));
  return s;
}

std::uint64_t draw(Rng& rng, IntRange r) { return r.hi <= r.lo ? r.lo : rng.between(r.lo, r.hi); }

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[rng.below(items.size())];
}

nlohmann::ordered_json to_json(const ClassProfile& p) {
  nlohmann::ordered_json j;
  j["label"] = p.label;
  j["variant"] = p.variant;
  j["protocol"] = p.protocol;
  j["services"] = p.services;
  j["conn_states"] = p.conn_states;
  j["dst_ports"] = p.dst_ports;
  j["dst_port_range"] = {p.dst_port_range.lo, p.dst_port_range.hi};
  j["orig_bytes"] = {p.orig_bytes.lo, p.orig_bytes.hi};
  j["resp_bytes"] = {p.resp_bytes.lo, p.resp_bytes.hi};
  j["missed_bytes"] = {p.missed_bytes.lo, p.missed_bytes.hi};
  j["orig_pkts"] = {p.orig_pkts.lo, p.orig_pkts.hi};
  j["resp_pkts"] = {p.resp_pkts.lo, p.resp_pkts.hi};
  j["duration"] = {p.duration.lo, p.duration.hi};
  j["header_bytes"] = p.header_bytes;
  j["source_pool"] = p.source_pool;
  return j;
}

IntRange int_range(const nlohmann::json& j, const char* key, IntRange fallback = {}) {
  if (!j.contains(key)) return fallback;
  const auto& a = j.at(key);
  IntRange r{a.at(0).get<std::uint64_t>(), a.at(1).get<std::uint64_t>()};
  if (r.hi < r.lo) throw Error(ErrorCode::ConfigInvalid, std::string(key) + " range is inverted", key);
  return r;
}

ClassProfile profile_from_json(const nlohmann::json& j) {
  ClassProfile p;
  p.label = j.at("label").get<int>();
  p.variant = j.value("variant", std::string{});
  p.protocol = j.value("protocol", std::string("TCP"));
  p.services = j.value("services", std::vector<std::string>{"-"});
  p.conn_states = j.value("conn_states", std::vector<std::string>{"SF"});
  p.dst_ports = j.value("dst_ports", std::vector<std::uint16_t>{});
  p.dst_port_range = int_range(j, "dst_port_range", {1, 65535});
  p.orig_bytes = int_range(j, "orig_bytes");
  p.resp_bytes = int_range(j, "resp_bytes");
  p.missed_bytes = int_range(j, "missed_bytes");
  p.orig_pkts = int_range(j, "orig_pkts");
  p.resp_pkts = int_range(j, "resp_pkts");
  if (j.contains("duration")) {
    p.duration = {j["duration"].at(0).get<double>(), j["duration"].at(1).get<double>()};
  }
  p.header_bytes = j.value("header_bytes", std::uint64_t{40});
  p.source_pool = j.value("source_pool", std::uint64_t{8});
  if (p.label < 1 || p.label > kNumClasses || p.services.empty() || p.conn_states.empty() ||
      p.dst_port_range.hi > 65535 || p.duration.lo < 0 || p.duration.hi < p.duration.lo ||
      p.source_pool == 0) {
    throw Error(ErrorCode::ConfigInvalid, "invalid class profile", p.variant);
  }
  return p;
}

}  // namespace

const ProfileSet& ProfileSet::builtin() {
  static const ProfileSet set = builtin_profiles();
  return set;
}

ProfileSet ProfileSet::load(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("profile file: ") + e.what());
  }
  try {
    ProfileSet s;
    s.version = j.at("version").get<int>();
    for (const auto& p : j.at("profiles")) s.profiles.push_back(profile_from_json(p));
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("profile file: ") + e.what());
  }
}

void ProfileSet::save(std::ostream& out) const {
  nlohmann::ordered_json j;
  j["version"] = version;
  j["profiles"] = nlohmann::ordered_json::array();
  for (const auto& p : profiles) j["profiles"].push_back(to_json(p));
  out << j.dump(2) << '\n';
}

std::vector<const ClassProfile*> ProfileSet::for_label(int label) const {
  std::vector<const ClassProfile*> out;
  for (const auto& p : profiles) {
    if (p.label == label) out.push_back(&p);
  }
  return out;
}

const ClassProfile& ProfileSet::variant(int label, std::string_view name) const {
  for (const auto& p : profiles) {
    if (p.label == label && p.variant == name) return p;
  }
  throw Error(ErrorCode::ConfigInvalid,
              "no profile '" + std::string(name) + "' for label " + std::to_string(label),
              std::string(name));
}

FlowRecord generate_flow(const ClassProfile& p, Rng& rng, std::optional<std::string> src_ip) {
  FlowRecord f;
  f.src_port = static_cast<std::uint16_t>(rng.between(1024, 65535));
  f.dst_port = p.dst_ports.empty()
                   ? static_cast<std::uint16_t>(draw(rng, p.dst_port_range))
                   : pick(rng, p.dst_ports);
  f.protocol = p.protocol;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", rng.uniform(p.duration.lo, p.duration.hi));
  f.duration = buf;
  f.service = pick(rng, p.services);
  f.orig_bytes = draw(rng, p.orig_bytes);
  f.resp_bytes = draw(rng, p.resp_bytes);
  f.missed_bytes = draw(rng, p.missed_bytes);
  f.orig_pkts = draw(rng, p.orig_pkts);
  f.resp_pkts = draw(rng, p.resp_pkts);
  f.orig_ip_bytes = f.orig_bytes + f.orig_pkts * p.header_bytes;
  f.resp_ip_bytes = f.resp_bytes + f.resp_pkts * p.header_bytes;
  f.conn_state = pick(rng, p.conn_states);
  if (src_ip) {
    f.src_ip = std::move(src_ip);
  } else {
    const std::uint64_t k = rng.below(p.source_pool);
    f.src_ip = "10." + std::to_string(p.label) + "." + std::to_string(k / 256) + "." +
               std::to_string(k % 256);
  }
  f.dst_ip = "192.168.0." + std::to_string(1 + rng.below(50));
  return f;
}

std::map<int, double> table_proportions(Dataset dataset) {
  std::map<int, double> out;
  double sum = 0.0;
  for (const auto& e : Taxonomy::builtin().rows(dataset)) {
    out[e.label_id] += e.proportion_percent;
    sum += e.proportion_percent;
  }
  for (auto& [label, p] : out) p /= sum;
  return out;
}

std::map<int, double> uniform_proportions() {
  std::map<int, double> out;
  for (int id = 1; id <= kNumClasses; ++id) out[id] = 1.0 / kNumClasses;
  return out;
}

LabeledDataset synthesize(const std::map<int, double>& proportions, std::size_t n,
                          std::uint64_t seed, const ProfileSet& profiles) {
  if (n < 1) throw Error(ErrorCode::BadProportions, "n must be at least 1");
  if (proportions.empty()) throw Error(ErrorCode::BadProportions, "no classes given");
  double sum = 0.0;
  for (auto [label, p] : proportions) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw Error(ErrorCode::BadProportions, "proportion must be finite and non-negative",
                  std::to_string(label));
    }
    if (!Taxonomy::builtin().contains_label(label) || profiles.for_label(label).empty()) {
      throw Error(ErrorCode::BadProportions, "no generator for label " + std::to_string(label),
                  std::to_string(label));
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::BadProportions, "proportions sum to " + format_double(sum));
  }

  struct Share {
    int label;
    std::size_t count;
    double remainder;
  };
  std::vector<Share> shares;
  std::size_t assigned = 0;
  for (auto [label, p] : proportions) {
    const double exact = static_cast<double>(n) * p;
    const auto whole = static_cast<std::size_t>(std::floor(exact));
    shares.push_back({label, whole, exact - static_cast<double>(whole)});
    assigned += whole;
  }
  std::vector<std::size_t> order(shares.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return shares[a].remainder > shares[b].remainder;
  });
  for (std::size_t i = 0; assigned < n; i = (i + 1) % order.size()) {
    ++shares[order[i]].count;
    ++assigned;
  }

  std::vector<int> labels;
  labels.reserve(n);
  for (const auto& s : shares) labels.insert(labels.end(), s.count, s.label);
  Rng rng(seed);
  rng.shuffle(std::span<int>(labels));

  LabeledDataset out;
  out.provenance = Provenance::Synthetic;
  out.seed = seed;
  out.records.reserve(n);
  for (int label : labels) {
    auto variants = profiles.for_label(label);
    const ClassProfile& p = *variants[rng.below(variants.size())];
    out.records.push_back({generate_flow(p, rng), label});
  }
  return out;
}

}  // namespace edgeguard
