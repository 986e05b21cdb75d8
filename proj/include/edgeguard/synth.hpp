#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string_view>
#include <string>
#include <vector>

#include "edgeguard/dataset.hpp"
#include "edgeguard/rng.hpp"

namespace edgeguard {

struct IntRange {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
  friend bool operator==(const IntRange&, const IntRange&) = default;
};

struct RealRange {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const RealRange&, const RealRange&) = default;
};

/// Feature generator for one class (or one variant of a class; benign
/// traffic has one variant per device type). Integer counters are uniform
/// over their range, duration is uniform and rendered with 6 decimals.
struct ClassProfile {
  int label = 0;
  std::string variant;
  std::string protocol = "TCP";
  std::vector<std::string> services = {"-"};
  std::vector<std::string> conn_states = {"SF"};
  std::vector<std::uint16_t> dst_ports;  // empty: draw from dst_port_range
  IntRange dst_port_range{1, 65535};
  IntRange orig_bytes, resp_bytes, missed_bytes, orig_pkts, resp_pkts;
  RealRange duration;
  std::uint64_t header_bytes = 40;   // per-packet IP + transport overhead
  std::uint64_t source_pool = 8;     // distinct src_ip values the class draws from

  friend bool operator==(const ClassProfile&, const ClassProfile&) = default;
};

struct ProfileSet {
  int version = 1;
  std::vector<ClassProfile> profiles;

  static const ProfileSet& builtin();
  static ProfileSet load(std::istream& in);
  void save(std::ostream& out) const;

  /// Variants for a label, in declaration order. Empty if none.
  std::vector<const ClassProfile*> for_label(int label) const;
  /// Throws ConfigInvalid when the variant does not exist.
  const ClassProfile& variant(int label, std::string_view name) const;

  friend bool operator==(const ProfileSet&, const ProfileSet&) = default;
};

/// Draws one flow from a profile. `src_ip` overrides the pooled source.
FlowRecord generate_flow(const ClassProfile& profile, Rng& rng,
                         std::optional<std::string> src_ip = std::nullopt);

/// Class proportions (fractions summing to 1) as printed for a dataset,
/// renormalized to absorb the tables' rounding residue.
std::map<int, double> table_proportions(Dataset dataset);
/// Equal share over every canonical label.
std::map<int, double> uniform_proportions();

/// Generates n labeled flows. Label counts are floor(n * p) with the
/// remainder handed out by largest fractional part (ties: lower label); the
/// record order is a seeded shuffle. Pure function of its arguments.
/// Throws BadProportions.
LabeledDataset synthesize(const std::map<int, double>& proportions, std::size_t n,
                          std::uint64_t seed, const ProfileSet& profiles = ProfileSet::builtin());

}  // namespace edgeguard
