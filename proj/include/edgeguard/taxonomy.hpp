#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "edgeguard/flow.hpp"

namespace edgeguard {

inline constexpr int kNumClasses = 21;
inline constexpr int kBenignLabel = 3;
inline constexpr int kDdosLabel = 10;

enum class Dataset { IoT23, TonIoT, Both };

std::string_view to_string(Dataset d);
Dataset parse_dataset(std::string_view text);

enum class TaxonomyMode {
  Canonical,   // C&C-FileDownload carries label 6; ids cover 1..21
  StrictPaper  // labels exactly as printed (two names on label 5, no 6)
};

struct TaxonomyEntry {
  Dataset dataset = Dataset::Both;
  std::string class_name;
  int label_id = 0;
  std::string description;
  double proportion_percent = 0.0;

  friend bool operator==(const TaxonomyEntry&, const TaxonomyEntry&) = default;
};

/// Lookup key: a class name or a numeric label id.
using ClassKey = std::variant<std::string, int>;

/// The merged IoT-23 / TON_IoT label space.
///
/// `entries()` holds the per-dataset rows. Name lookups search the rows of
/// the requested dataset (Both searches both tables). Id lookups against a
/// single dataset return that table's row; against Both they resolve through
/// the merged map, where ids printed in both tables (3 and 10) yield a
/// synthesized entry with dataset Both.
class Taxonomy {
 public:
  explicit Taxonomy(std::vector<TaxonomyEntry> entries, TaxonomyMode mode = TaxonomyMode::Canonical);

  static const Taxonomy& builtin(TaxonomyMode mode = TaxonomyMode::Canonical);

  const std::vector<TaxonomyEntry>& entries() const noexcept { return entries_; }
  TaxonomyMode mode() const noexcept { return mode_; }

  /// Throws Error(UnknownClass).
  TaxonomyEntry lookup(const ClassKey& key, Dataset dataset = Dataset::Both) const;

  bool contains_label(int label_id) const;
  /// Sorted distinct label ids.
  std::vector<int> label_ids() const;
  /// Name of the merged class for an id ("Benign" for 3).
  std::string class_name(int label_id) const;
  /// Resolves a label cell: decimal id or class name. Throws UnknownClass.
  int resolve_label(std::string_view text) const;

  std::vector<TaxonomyEntry> rows(Dataset dataset) const;

  void export_delimited(std::ostream& out, char sep = ',') const;
  static Taxonomy import_delimited(std::istream& in, TaxonomyMode mode = TaxonomyMode::Canonical,
                                   char sep = ',');

 private:
  std::vector<TaxonomyEntry> entries_;
  TaxonomyMode mode_;
};

/// Percentage of flows per label id: 100 * count / total.
/// Throws Error(EmptyStream) on empty input.
std::map<int, double> class_proportions(std::span<const LabeledFlow> flows);

}  // namespace edgeguard
