#include "edgeguard/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "edgeguard/error.hpp"
#include "edgeguard/prompt.hpp"
#include "edgeguard/rng.hpp"

namespace edgeguard {

namespace {

double squash(double v) { return std::log1p(std::max(v, 0.0)); }


std::map<std::string, int> vocabulary(const std::set<std::string>& tokens) {
  std::map<std::string, int> out;
  int code = 0;
  for (const auto& t : tokens) out.emplace(t, code++);
  return out;
}

double code_of(const std::map<std::string, int>& vocab, const std::string& token) {
  auto it = vocab.find(token);
  return it == vocab.end() ? -1.0 : static_cast<double>(it->second);
}

double ratio(std::uint64_t bytes, std::uint64_t pkts) {
  return pkts == 0 ? 0.0 : static_cast<double>(bytes) / static_cast<double>(pkts);
}

}  // namespace

FeatureVector BaselineBackend::features(const FlowRecord& f) const {
  return {static_cast<double>(f.src_port),
          static_cast<double>(f.dst_port),
          code_of(protocols_, f.protocol),
          f.duration_seconds(),
          code_of(services_, f.service),
          static_cast<double>(f.orig_bytes),
          static_cast<double>(f.resp_bytes),
          static_cast<double>(f.missed_bytes),
          static_cast<double>(f.orig_ip_bytes),
          static_cast<double>(f.resp_ip_bytes),
          static_cast<double>(f.orig_pkts),
          static_cast<double>(f.resp_pkts),
          code_of(states_, f.conn_state),
          ratio(f.orig_bytes, f.orig_pkts),
          ratio(f.resp_bytes, f.resp_pkts)};
}

BaselineBackend BaselineBackend::fit(const LabeledDataset& training, const BaselineOptions& options) {
  if (training.records.empty()) {
    throw Error(ErrorCode::DegenerateTraining, "training set is empty");
  }
  BaselineBackend model;
  model.options_ = options;

  std::vector<std::size_t> rows(training.size());
  std::iota(rows.begin(), rows.end(), 0);
  if (options.max_samples > 0 && rows.size() > options.max_samples) {
    Rng rng(options.seed);
    rng.shuffle(std::span<std::size_t>(rows));
    rows.resize(options.max_samples);
    std::sort(rows.begin(), rows.end());
  }

  std::set<std::string> protocols, services, states;
  std::set<int> labels;
  for (auto r : rows) {
    const auto& rec = training.records[r];
    protocols.insert(rec.flow.protocol);
    services.insert(rec.flow.service);
    states.insert(rec.flow.conn_state);
    labels.insert(rec.label);
  }
  model.protocols_ = vocabulary(protocols);
  model.services_ = vocabulary(services);
  model.states_ = vocabulary(states);

  std::vector<FeatureVector> x;
  std::vector<int> y;
  x.reserve(rows.size());
  y.reserve(rows.size());
  for (auto r : rows) {
    x.push_back(model.features(training.records[r].flow));
    y.push_back(training.records[r].label);
  }

  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (labels.size() < 2) {
    model.warnings_.push_back("training set has a single class (" +
                              std::to_string(*labels.begin()) +
                              "); backend always predicts it");
    Node leaf;
    leaf.leaf_logits = model.leaf_logits(y, idx, 0, idx.size());
    model.nodes_.push_back(leaf);
    return model;
  }
  model.build(x, y, idx, 0, idx.size(), 0);
  return model;
}

ClassArray BaselineBackend::leaf_logits(const std::vector<int>& y,
                                        const std::vector<std::size_t>& idx, std::size_t begin,
                                        std::size_t end) const {
  std::array<double, kNumClasses> counts{};
  for (std::size_t i = begin; i < end; ++i) counts[static_cast<std::size_t>(y[idx[i]] - 1)] += 1.0;
  const double a = options_.smoothing;
  const double denom = static_cast<double>(end - begin) + kNumClasses * a;
  ClassArray out;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    // a == 0 would give log(0) for absent classes; floor it.
    out[c] = std::log(std::max(counts[c] + a, 1e-300) / denom);
  }
  return out;
}

int BaselineBackend::build(const std::vector<FeatureVector>& x, const std::vector<int>& y,
                           std::vector<std::size_t>& idx, std::size_t begin, std::size_t end,
                           int depth) {
  const std::size_t m = end - begin;
  std::array<std::size_t, kNumClasses> total{};
  for (std::size_t i = begin; i < end; ++i) ++total[static_cast<std::size_t>(y[idx[i]] - 1)];
  const auto make_leaf = [&] {
    Node leaf;
    leaf.depth = depth;
    leaf.leaf_logits = leaf_logits(y, idx, begin, end);
    nodes_.push_back(leaf);
    return static_cast<int>(nodes_.size() - 1);
  };

  const bool pure = std::count_if(total.begin(), total.end(), [](auto c) { return c > 0; }) <= 1;
  const std::size_t min_leaf = std::max<std::size_t>(options_.min_samples_leaf, 1);
  if (pure || depth >= options_.max_depth || m < 2 * min_leaf) return make_leaf();

  double parent_sq = 0.0;
  for (auto c : total) parent_sq += static_cast<double>(c) * static_cast<double>(c);
  const double parent_impurity = static_cast<double>(m) - parent_sq / static_cast<double>(m);

  int best_feature = -1;
  double best_threshold = 0.0;
  double best_impurity = parent_impurity - 1e-9;
  double best_margin = -1.0;
  const double tie = 1e-9 * static_cast<double>(m);

  // Near-equal Gini splits are common on separable data; among them prefer
  // the widest gap (log scale, relative to the node's range) so thresholds do
  // not land in hairline gaps between neighbouring classes.
  std::vector<std::pair<double, std::size_t>> column(m);
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    for (std::size_t i = 0; i < m; ++i) column[i] = {x[idx[begin + i]][f], idx[begin + i]};
    std::sort(column.begin(), column.end());
    if (column.front().first == column.back().first) continue;
    const double span = squash(column.back().first) - squash(column.front().first);

    std::array<std::size_t, kNumClasses> left{};
    double left_sq = 0.0;
    double right_sq = parent_sq;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      const auto c = static_cast<std::size_t>(y[column[i].second] - 1);
      // Moving one sample of class c: (n+1)^2 - n^2 = 2n + 1.
      left_sq += 2.0 * static_cast<double>(left[c]) + 1.0;
      right_sq -= 2.0 * static_cast<double>(total[c] - left[c]) - 1.0;
      ++left[c];
      if (column[i].first == column[i + 1].first) continue;
      const std::size_t nl = i + 1;
      const std::size_t nr = m - nl;
      if (nl < min_leaf || nr < min_leaf) continue;
      const double impurity = (static_cast<double>(nl) - left_sq / static_cast<double>(nl)) +
                              (static_cast<double>(nr) - right_sq / static_cast<double>(nr));
      if (impurity >= parent_impurity - 1e-9 || impurity > best_impurity + tie) continue;
      const double a = column[i].first;
      const double b = column[i + 1].first;
      const double margin = span > 0.0 ? (squash(b) - squash(a)) / span : 0.0;
      if (impurity < best_impurity - tie || margin > best_margin) {
        best_impurity = std::min(best_impurity, impurity);
        best_margin = margin;
        best_feature = static_cast<int>(f);
        double t = a >= 0.0 ? std::expm1((squash(a) + squash(b)) / 2.0) : a + (b - a) / 2.0;
        if (!(t >= a && t < b)) t = a;
        best_threshold = t;
      }
    }
  }
  if (best_feature < 0) return make_leaf();

  const auto f = static_cast<std::size_t>(best_feature);
  auto mid = std::stable_partition(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                                   idx.begin() + static_cast<std::ptrdiff_t>(end),
                                   [&](std::size_t r) { return x[r][f] <= best_threshold; });
  const auto split_at = static_cast<std::size_t>(mid - idx.begin());

  Node node;
  node.feature = best_feature;
  node.threshold = best_threshold;
  node.depth = depth;
  nodes_.push_back(node);
  const int self = static_cast<int>(nodes_.size() - 1);
  const int left = build(x, y, idx, begin, split_at, depth + 1);
  const int right = build(x, y, idx, split_at, end, depth + 1);
  nodes_[static_cast<std::size_t>(self)].left = left;
  nodes_[static_cast<std::size_t>(self)].right = right;
  return self;
}

ClassArray BaselineBackend::logits_for(const FlowRecord& flow) const {
  const FeatureVector v = features(flow);
  std::size_t n = 0;
  while (nodes_[n].feature >= 0) {
    const Node& node = nodes_[n];
    n = static_cast<std::size_t>(v[static_cast<std::size_t>(node.feature)] <= node.threshold
                                     ? node.left
                                     : node.right);
  }
  return nodes_[n].leaf_logits;
}

std::vector<double> BaselineBackend::logits(std::string_view prompt) const {
  const ClassArray z = logits_for(parse_prompt(prompt));
  return {z.begin(), z.end()};
}

std::size_t BaselineBackend::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature < 0; }));
}

int BaselineBackend::depth() const {
  int d = 0;
  for (const auto& n : nodes_) d = std::max(d, n.depth);
  return d;
}

}  // namespace edgeguard
