#include "edgeguard/taxonomy.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "edgeguard/delimited.hpp"
#include "edgeguard/error.hpp"
#include "edgeguard/flow.hpp"

namespace edgeguard {

namespace {

std::vector<TaxonomyEntry> builtin_rows(TaxonomyMode mode) {
  const int file_download = mode == TaxonomyMode::Canonical ? 6 : 5;
  using D = Dataset;
  return {
      {D::TonIoT, "Scanning", 20, "Network scanning activity.", 31.963},
      {D::TonIoT, "DDoS", 10, "Distributed Denial-of-Service attack.", 27.597},
      {D::TonIoT, "DoS", 11, "Denial-of-Service attack.", 15.110},
      {D::TonIoT, "XSS", 21, "Cross-site scripting attack.", 9.441},
      {D::TonIoT, "Password", 18, "Password-based attack attempts.", 7.692},
      {D::TonIoT, "Normal", 3, "Normal traffic.", 3.565},
      {D::TonIoT, "Backdoor", 2, "Backdoor-based malicious activity.", 2.275},
      {D::TonIoT, "Injection", 13, "Code injection attack.", 2.026},
      {D::TonIoT, "Ransomware", 19, "Ransomware attack.", 0.326},
      {D::TonIoT, "MITM", 14, "Man-in-the-middle attack.", 0.005},
      {D::IoT23, "PartOfAHorizontalPortScan", 17, "Horizontal port scanning activity.", 56.048},
      {D::IoT23, "Okiru", 15, "Okiru botnet activity.", 21.715},
      {D::IoT23, "Benign", 3, "Normal traffic.", 11.392},
      {D::IoT23, "DDoS", 10, "Distributed Denial-of-Service attack.", 10.560},
      {D::IoT23, "C&C", 4, "Command and control communication.", 0.253},
      {D::IoT23, "C&C-HeartBeat", 5, "Periodic heartbeat signal to C&C.", 0.022},
      {D::IoT23, "Attack", 1, "General attack activity.", 0.009},
      {D::IoT23, "C&C-FileDownload", file_download, "File download from C&C server.", 0.001},
      {D::IoT23, "C&C-Torii", 9, "Torii botnet C&C communication.", 0.0005},
      {D::IoT23, "FileDownload", 12, "File download activity.", 0.0002},
      {D::IoT23, "C&C-HeartBeat-FileDownload", 7, "Combination of heartbeat and file download.",
       0.0001},
      {D::IoT23, "Okiru-Attack", 16, "Okiru botnet attack.", 0.00005},
      {D::IoT23, "C&C-Mirai", 8, "Mirai botnet C&C communication.", 0.00002},
  };
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return c >= '0' && c <= '9';
  });
}

}  // namespace

std::string_view to_string(Dataset d) {
  switch (d) {
    case Dataset::IoT23: return "IoT23";
    case Dataset::TonIoT: return "TonIoT";
    case Dataset::Both: return "Both";
  }
  return "Both";
}

Dataset parse_dataset(std::string_view text) {
  if (text == "IoT23" || text == "IoT-23" || text == "iot23") return Dataset::IoT23;
  if (text == "TonIoT" || text == "Ton_IoT" || text == "TON_IoT" || text == "toniot") {
    return Dataset::TonIoT;
  }
  if (text == "Both" || text == "both") return Dataset::Both;
  throw Error(ErrorCode::SchemaMismatch, "unknown dataset '" + std::string(text) + "'",
              std::string(text));
}

Taxonomy::Taxonomy(std::vector<TaxonomyEntry> entries, TaxonomyMode mode)
    : entries_(std::move(entries)), mode_(mode) {
  std::set<std::pair<Dataset, std::string>> names;
  std::map<std::string, int> id_by_name;
  std::map<Dataset, double> sums;
  for (const auto& e : entries_) {
    if (e.label_id < 1 || e.label_id > kNumClasses) {
      throw Error(ErrorCode::OutOfRange, "label id outside 1..21", e.class_name,
                  static_cast<std::size_t>(e.label_id));
    }
    if (e.dataset == Dataset::Both) {
      throw Error(ErrorCode::SchemaMismatch, "taxonomy rows must name a single dataset",
                  e.class_name);
    }
    if (!names.emplace(e.dataset, e.class_name).second) {
      throw Error(ErrorCode::SchemaMismatch, "duplicate class name in dataset", e.class_name);
    }
    auto [it, inserted] = id_by_name.emplace(e.class_name, e.label_id);
    if (!inserted && it->second != e.label_id) {
      throw Error(ErrorCode::SchemaMismatch, "shared class name maps to different ids",
                  e.class_name);
    }
    sums[e.dataset] += e.proportion_percent;
  }
  for (auto [d, sum] : sums) {
    if (sum > 100.001) {
      throw Error(ErrorCode::BadProportions,
                  "proportions of " + std::string(to_string(d)) + " exceed 100%");
    }
  }
  if (mode_ == TaxonomyMode::Canonical) {
    auto ids = label_ids();
    if (ids.size() != static_cast<std::size_t>(kNumClasses)) {
      throw Error(ErrorCode::SchemaMismatch, "canonical taxonomy must cover labels 1..21");
    }
  }
}

const Taxonomy& Taxonomy::builtin(TaxonomyMode mode) {
  static const Taxonomy canonical(builtin_rows(TaxonomyMode::Canonical), TaxonomyMode::Canonical);
  static const Taxonomy strict(builtin_rows(TaxonomyMode::StrictPaper), TaxonomyMode::StrictPaper);
  return mode == TaxonomyMode::Canonical ? canonical : strict;
}

std::vector<TaxonomyEntry> Taxonomy::rows(Dataset dataset) const {
  std::vector<TaxonomyEntry> out;
  for (const auto& e : entries_) {
    if (dataset == Dataset::Both || e.dataset == dataset) out.push_back(e);
  }
  return out;
}

TaxonomyEntry Taxonomy::lookup(const ClassKey& key, Dataset dataset) const {
  if (const auto* name = std::get_if<std::string>(&key)) {
    for (const auto& e : entries_) {
      if ((dataset == Dataset::Both || e.dataset == dataset) && e.class_name == *name) return e;
    }
    throw Error(ErrorCode::UnknownClass, "unknown class '" + *name + "'", *name);
  }

  const int id = std::get<int>(key);
  const TaxonomyEntry* first = nullptr;
  bool in_iot23 = false;
  bool in_toniot = false;
  for (const auto& e : entries_) {
    if (e.label_id != id) continue;
    if (dataset != Dataset::Both && e.dataset != dataset) continue;
    if (first == nullptr) first = &e;
    (e.dataset == Dataset::IoT23 ? in_iot23 : in_toniot) = true;
  }
  if (first == nullptr) {
    throw Error(ErrorCode::UnknownClass, "unknown label id " + std::to_string(id),
                std::to_string(id));
  }
  if (in_iot23 && in_toniot) {
    // Present in both tables: report the merged class under the IoT-23 name.
    TaxonomyEntry merged;
    for (const auto& e : entries_) {
      if (e.label_id == id && e.dataset == Dataset::IoT23) {
        merged = e;
        break;
      }
    }
    merged.dataset = Dataset::Both;
    merged.proportion_percent = 0.0;
    return merged;
  }
  return *first;
}

bool Taxonomy::contains_label(int label_id) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const TaxonomyEntry& e) { return e.label_id == label_id; });
}

std::vector<int> Taxonomy::label_ids() const {
  std::set<int> ids;
  for (const auto& e : entries_) ids.insert(e.label_id);
  return {ids.begin(), ids.end()};
}

std::string Taxonomy::class_name(int label_id) const {
  return lookup(label_id, Dataset::Both).class_name;
}

int Taxonomy::resolve_label(std::string_view text) const {
  if (all_digits(text)) {
    int id = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), id);
    if (ec != std::errc() || !contains_label(id)) {
      throw Error(ErrorCode::UnknownClass, "unknown label id " + std::string(text),
                  std::string(text));
    }
    return id;
  }
  return lookup(std::string(text), Dataset::Both).label_id;
}

void Taxonomy::export_delimited(std::ostream& out, char sep) const {
  out << "dataset" << sep << "class_name" << sep << "label_id" << sep << "description" << sep
      << "proportion_percent\n";
  for (const auto& e : entries_) {
    out << to_string(e.dataset) << sep << quote_cell(e.class_name, sep) << sep << e.label_id
        << sep << quote_cell(e.description, sep) << sep << format_double(e.proportion_percent)
        << '\n';
  }
}

Taxonomy Taxonomy::import_delimited(std::istream& in, TaxonomyMode mode, char sep) {
  std::string line;
  std::vector<std::string> cells;
  if (!std::getline(in, line) || !split_delimited(line, sep, cells) ||
      cells != std::vector<std::string>{"dataset", "class_name", "label_id", "description",
                                        "proportion_percent"}) {
    throw Error(ErrorCode::SchemaMismatch, "taxonomy header must be "
                                           "dataset,class_name,label_id,description,proportion_percent");
  }
  std::vector<TaxonomyEntry> rows;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    if (!split_delimited(line, sep, cells) || cells.size() != 5) {
      throw Error(ErrorCode::SchemaMismatch, "taxonomy row must have 5 cells", line, row);
    }
    TaxonomyEntry e;
    e.dataset = parse_dataset(cells[0]);
    e.class_name = cells[1];
    auto [p1, ec1] = std::from_chars(cells[2].data(), cells[2].data() + cells[2].size(), e.label_id);
    auto [p2, ec2] = std::from_chars(cells[4].data(), cells[4].data() + cells[4].size(),
                                     e.proportion_percent);
    if (ec1 != std::errc() || p1 != cells[2].data() + cells[2].size() || ec2 != std::errc() ||
        p2 != cells[4].data() + cells[4].size()) {
      throw Error(ErrorCode::MalformedNumber, "bad number in taxonomy row", line, row);
    }
    e.description = cells[3];
    rows.push_back(std::move(e));
  }
  return Taxonomy(std::move(rows), mode);
}

std::map<int, double> class_proportions(std::span<const LabeledFlow> flows) {
  if (flows.empty()) throw Error(ErrorCode::EmptyStream, "no labeled flows");
  std::map<int, std::size_t> counts;
  for (const auto& f : flows) ++counts[f.label];
  std::map<int, double> out;
  const double total = static_cast<double>(flows.size());
  for (auto [label, n] : counts) out[label] = 100.0 * static_cast<double>(n) / total;
  return out;
}

}  // namespace edgeguard
