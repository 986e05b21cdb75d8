#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "edgeguard/error.hpp"
#include "edgeguard/flow.hpp"
#include "edgeguard/taxonomy.hpp"

namespace edgeguard {

enum class Provenance { IoT23, TonIoT, Synthetic, Mixed };

std::string_view to_string(Provenance p);

struct LabeledDataset {
  std::vector<LabeledFlow> records;  // ingestion order
  Provenance provenance = Provenance::Synthetic;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return records.size(); }
};

enum class DataFormat { Delimited, JsonLines };

DataFormat parse_data_format(std::string_view text);

struct IngestOptions {
  DataFormat format = DataFormat::Delimited;
  char separator = ',';
  std::string label_column = "label";
  Provenance provenance = Provenance::Mixed;
  /// Abort when more than this fraction of rows is malformed.
  double max_malformed_fraction = 0.01;
  TaxonomyMode taxonomy = TaxonomyMode::Canonical;
};

struct RowProblem {
  std::size_t row = 0;  // 1-based data row (header excluded)
  ErrorCode code{};
  std::string message;
};

struct IngestResult {
  LabeledDataset dataset;
  std::size_t rows_read = 0;
  std::vector<RowProblem> malformed;
};

/// Reads labeled flows. Header (or JSON keys) name FlowRecord fields plus the
/// label column, which holds a label id or a class name. Zeek-style column
/// names (id.orig_p, proto, ts, ...) are accepted as aliases.
///
/// Rows that fail validation are counted in `malformed`. When their share
/// exceeds `max_malformed_fraction` the first failure is rethrown (so an
/// unknown label surfaces as LabelUnknown). A header without the required
/// columns throws SchemaMismatch; stream errors throw IoFailure.
IngestResult ingest(std::istream& in, const IngestOptions& options = {});

/// Writes the dataset in the schema ingest() reads back losslessly.
void export_dataset(std::ostream& out, const LabeledDataset& dataset,
                    DataFormat format = DataFormat::Delimited, char separator = ',');

enum class SplitMode { Stratified, Random };

std::string_view to_string(SplitMode m);

struct SplitAssignment {
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> val_idx;
  std::vector<std::size_t> test_idx;
  double train_ratio = 0.6;
  double val_ratio = 0.2;
  double test_ratio = 0.2;
  std::uint64_t seed = 0;
  SplitMode mode = SplitMode::Stratified;

  friend bool operator==(const SplitAssignment&, const SplitAssignment&) = default;
};

/// 60/20/20 split: |train| = round(0.6n), |val| = round(0.2n), test gets the
/// rest. Stratified by label when every class has at least 5 members,
/// otherwise one global shuffle; `mode` reports which was used. Index sets are
/// sorted. Throws TooFewRecords when n < 5.
SplitAssignment split(const LabeledDataset& dataset, std::uint64_t seed,
                      bool prefer_stratified = true);

/// Materializes one side of a split.
LabeledDataset subset(const LabeledDataset& dataset, const std::vector<std::size_t>& indices);

}  // namespace edgeguard
