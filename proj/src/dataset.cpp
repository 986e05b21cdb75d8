#include "edgeguard/dataset.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "edgeguard/delimited.hpp"
#include "edgeguard/error.hpp"
#include "edgeguard/rng.hpp"

namespace edgeguard {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::IoT23: return "IoT23";
    case Provenance::TonIoT: return "TonIoT";
    case Provenance::Synthetic: return "Synthetic";
    case Provenance::Mixed: return "Mixed";
  }
  return "Mixed";
}

std::string_view to_string(SplitMode m) {
  return m == SplitMode::Stratified ? "stratified" : "random";
}

DataFormat parse_data_format(std::string_view text) {
  if (text == "csv" || text == "delimited" || text == "tsv") return DataFormat::Delimited;
  if (text == "jsonl" || text == "json-lines" || text == "ndjson") return DataFormat::JsonLines;
  throw Error(ErrorCode::SchemaMismatch, "unknown data format '" + std::string(text) + "'",
              std::string(text));
}

namespace {

std::string canonical_column(std::string_view name) {
  static const std::map<std::string_view, std::string_view> aliases = {
      {"id.orig_h", field::kSrcIp},   {"id.resp_h", field::kDstIp},
      {"id.orig_p", field::kSrcPort}, {"id.resp_p", field::kDstPort},
      {"proto", field::kProtocol},    {"ts", field::kTimestamp},
  };
  auto it = aliases.find(name);
  return std::string(it == aliases.end() ? name : it->second);
}

struct RowOutcome {
  bool ok = false;
  LabeledFlow record;
  RowProblem problem;
};

RowOutcome convert_row(const FieldMap& cells, const std::string& label_cell, std::size_t row,
                       const Taxonomy& taxonomy) {
  RowOutcome out;
  try {
    out.record.flow = validate_flow(cells);
  } catch (const Error& e) {
    out.problem = {row, e.code(), e.message()};
    return out;
  }
  try {
    out.record.label = taxonomy.resolve_label(label_cell);
  } catch (const Error&) {
    out.problem = {row, ErrorCode::LabelUnknown, "unknown label '" + label_cell + "'"};
    return out;
  }
  out.ok = true;
  return out;
}

void check_header(const std::vector<std::string>& columns, const std::string& label_column) {
  for (auto required : kRequiredFlowFields) {
    if (std::find(columns.begin(), columns.end(), required) == columns.end()) {
      throw Error(ErrorCode::SchemaMismatch, "missing column '" + std::string(required) + "'",
                  std::string(required));
    }
  }
  if (std::find(columns.begin(), columns.end(), label_column) == columns.end()) {
    throw Error(ErrorCode::SchemaMismatch, "missing label column '" + label_column + "'",
                label_column);
  }
}

std::string json_cell(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return {};
  return v.dump();
}

}  // namespace

IngestResult ingest(std::istream& in, const IngestOptions& options) {
  const Taxonomy& taxonomy = Taxonomy::builtin(options.taxonomy);
  IngestResult result;
  result.dataset.provenance = options.provenance;

  auto accept = [&](RowOutcome&& outcome) {
    if (outcome.ok) {
      result.dataset.records.push_back(std::move(outcome.record));
    } else {
      result.malformed.push_back(std::move(outcome.problem));
    }
  };

  std::string line;
  if (options.format == DataFormat::Delimited) {
    std::vector<std::string> header;
    if (!std::getline(in, line)) {
      if (in.bad()) throw Error(ErrorCode::IoFailure, "read failed");
      throw Error(ErrorCode::SchemaMismatch, "empty input: header row expected");
    }
    if (!split_delimited(line, options.separator, header)) {
      throw Error(ErrorCode::SchemaMismatch, "unterminated quote in header");
    }
    for (auto& h : header) h = canonical_column(h);
    check_header(header, options.label_column);

    std::vector<std::string> cells;
    std::size_t row = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line == "\r") continue;
      ++row;
      if (!split_delimited(line, options.separator, cells) || cells.size() != header.size()) {
        result.malformed.push_back(
            {row, ErrorCode::SchemaMismatch,
             "expected " + std::to_string(header.size()) + " cells, got " +
                 std::to_string(cells.size())});
        continue;
      }
      FieldMap fields;
      std::string label;
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == options.label_column) {
          label = cells[i];
        } else {
          fields.insert_or_assign(header[i], cells[i]);
        }
      }
      accept(convert_row(fields, label, row, taxonomy));
    }
    result.rows_read = row;
  } else {
    std::size_t row = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line == "\r") continue;
      ++row;
      auto obj = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
      if (obj.is_discarded() || !obj.is_object()) {
        result.malformed.push_back({row, ErrorCode::SchemaMismatch, "line is not a JSON object"});
        continue;
      }
      FieldMap fields;
      std::string label;
      bool has_label = false;
      for (const auto& [key, value] : obj.items()) {
        if (key == options.label_column) {
          label = json_cell(value);
          has_label = true;
        } else {
          fields.insert_or_assign(canonical_column(key), json_cell(value));
        }
      }
      if (!has_label) {
        result.malformed.push_back(
            {row, ErrorCode::SchemaMismatch, "missing label key '" + options.label_column + "'"});
        continue;
      }
      accept(convert_row(fields, label, row, taxonomy));
    }
    result.rows_read = row;
  }
  if (in.bad()) throw Error(ErrorCode::IoFailure, "read failed");

  if (!result.malformed.empty()) {
    const double fraction = static_cast<double>(result.malformed.size()) /
                            static_cast<double>(std::max<std::size_t>(result.rows_read, 1));
    if (fraction > options.max_malformed_fraction) {
      const RowProblem& first = result.malformed.front();
      throw Error(first.code,
                  std::to_string(result.malformed.size()) + " of " +
                      std::to_string(result.rows_read) + " rows malformed; first at row " +
                      std::to_string(first.row) + ": " + first.message,
                  first.message, first.row);
    }
  }
  return result;
}

void export_dataset(std::ostream& out, const LabeledDataset& dataset, DataFormat format,
                    char separator) {
  if (format == DataFormat::Delimited) {
    for (auto name : kAllFlowFields) out << name << separator;
    out << "label\n";
    for (const auto& rec : dataset.records) {
      FieldMap m = fields_of(rec.flow);
      for (auto name : kAllFlowFields) {
        auto it = m.find(name);
        if (it != m.end()) out << quote_cell(it->second, separator);
        out << separator;
      }
      out << rec.label << '\n';
    }
  } else {
    for (const auto& rec : dataset.records) {
      const FlowRecord& f = rec.flow;
      nlohmann::ordered_json j;
      if (f.src_ip) j["src_ip"] = *f.src_ip;
      if (f.dst_ip) j["dst_ip"] = *f.dst_ip;
      j["src_port"] = f.src_port;
      j["dst_port"] = f.dst_port;
      j["protocol"] = f.protocol;
      j["duration"] = f.duration;
      j["service"] = f.service;
      j["orig_bytes"] = f.orig_bytes;
      j["resp_bytes"] = f.resp_bytes;
      j["missed_bytes"] = f.missed_bytes;
      j["orig_ip_bytes"] = f.orig_ip_bytes;
      j["resp_ip_bytes"] = f.resp_ip_bytes;
      j["orig_pkts"] = f.orig_pkts;
      j["resp_pkts"] = f.resp_pkts;
      j["conn_state"] = f.conn_state;
      if (f.timestamp) j["timestamp"] = format_double(*f.timestamp);
      j["label"] = rec.label;
      out << j.dump() << '\n';
    }
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed");
}

namespace {

// Distributes `total` units over classes in proportion to numer[i]/denom,
// each class receiving floor or (when needed) more, never exceeding cap[i].
// Largest fractional remainder first; ties go to the lower class index.
std::vector<std::size_t> apportion(const std::vector<std::size_t>& numer, std::size_t denom,
                                   std::size_t total, const std::vector<std::size_t>& floor_at,
                                   const std::vector<std::size_t>& cap) {
  const std::size_t k = numer.size();
  std::vector<std::size_t> out(k);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    out[i] = std::clamp(numer[i] / denom, floor_at[i], cap[i]);
    assigned += out[i];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return numer[a] % denom > numer[b] % denom;
  });
  while (assigned < total) {
    bool progressed = false;
    for (std::size_t i : order) {
      if (assigned == total) break;
      if (out[i] < cap[i]) {
        ++out[i];
        ++assigned;
        progressed = true;
      }
    }
    if (!progressed) break;
  }
  while (assigned > total) {
    bool progressed = false;
    for (auto it = order.rbegin(); it != order.rend() && assigned > total; ++it) {
      if (out[*it] > floor_at[*it]) {
        --out[*it];
        --assigned;
        progressed = true;
      }
    }
    if (!progressed) break;
  }
  return out;
}

}  // namespace

SplitAssignment split(const LabeledDataset& dataset, std::uint64_t seed, bool prefer_stratified) {
  const std::size_t n = dataset.size();
  if (n < 5) {
    throw Error(ErrorCode::TooFewRecords, "split needs at least 5 records, got " + std::to_string(n),
                {}, n);
  }
  const std::size_t n_train = (6 * n + 5) / 10;
  const std::size_t n_val = (2 * n + 5) / 10;

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[dataset.records[i].label].push_back(i);
  const bool stratify =
      prefer_stratified && std::all_of(by_class.begin(), by_class.end(),
                                       [](const auto& kv) { return kv.second.size() >= 5; });

  SplitAssignment s;
  s.seed = seed;
  Rng rng(seed);

  if (!stratify) {
    s.mode = SplitMode::Random;
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(std::span<std::size_t>(idx));
    s.train_idx.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.val_idx.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                     idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test_idx.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
  } else {
    s.mode = SplitMode::Stratified;
    std::vector<std::size_t> counts;
    for (const auto& [label, members] : by_class) counts.push_back(members.size());
    const std::size_t k = counts.size();

    std::vector<std::size_t> train_numer(k), cum_numer(k), zeros(k, 0);
    for (std::size_t c = 0; c < k; ++c) {
      train_numer[c] = 6 * counts[c];
      cum_numer[c] = 8 * counts[c];
    }
    auto train = apportion(train_numer, 10, n_train, zeros, counts);
    auto cum = apportion(cum_numer, 10, n_train + n_val, train, counts);

    std::size_t c = 0;
    for (auto& [label, members] : by_class) {
      rng.shuffle(std::span<std::size_t>(members));
      for (std::size_t j = 0; j < members.size(); ++j) {
        if (j < train[c]) {
          s.train_idx.push_back(members[j]);
        } else if (j < cum[c]) {
          s.val_idx.push_back(members[j]);
        } else {
          s.test_idx.push_back(members[j]);
        }
      }
      ++c;
    }
  }
  std::sort(s.train_idx.begin(), s.train_idx.end());
  std::sort(s.val_idx.begin(), s.val_idx.end());
  std::sort(s.test_idx.begin(), s.test_idx.end());
  return s;
}

LabeledDataset subset(const LabeledDataset& dataset, const std::vector<std::size_t>& indices) {
  LabeledDataset out;
  out.provenance = dataset.provenance;
  out.seed = dataset.seed;
  out.records.reserve(indices.size());
  for (auto i : indices) out.records.push_back(dataset.records.at(i));
  return out;
}

}  // namespace edgeguard
