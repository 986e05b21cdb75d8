#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "edgeguard/backend.hpp"
#include "edgeguard/dataset.hpp"
#include "edgeguard/metrics.hpp"

namespace edgeguard {

struct BaselineOptions {
  int max_depth = 16;
  std::size_t min_samples_leaf = 1;
  double smoothing = 0.5;        // Laplace pseudo-count per class in each leaf
  std::size_t max_samples = 0;   // 0: fit on everything; else seeded subsample
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kNumFeatures = 15;
using FeatureVector = std::array<double, kNumFeatures>;

/// Reference non-LLM classifier: a CART tree (Gini impurity) over the numeric
/// fields of the prompt. Leaves emit log((n_c + a) / (n + 21a)). Immutable
/// after fitting, so concurrent reads are safe.
class BaselineBackend final : public ClassifierBackend {
 public:
  /// Throws DegenerateTraining on an empty training set. A single-class set
  /// yields a constant classifier and a message in warnings().
  static BaselineBackend fit(const LabeledDataset& training, const BaselineOptions& options = {});

  std::vector<double> logits(std::string_view prompt) const override;
  BackendDescriptor descriptor() const override { return {"baseline-tree", "1"}; }
  bool concurrent_safe() const override { return true; }

  ClassArray logits_for(const FlowRecord& flow) const;
  FeatureVector features(const FlowRecord& flow) const;

  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t leaf_count() const;
  int depth() const;

 private:
  struct Node {
    int feature = -1;       // -1 marks a leaf
    double threshold = 0.0; // go left when value <= threshold
    int left = -1;
    int right = -1;
    int depth = 0;
    ClassArray leaf_logits{};
  };

  BaselineBackend() = default;
  int build(const std::vector<FeatureVector>& x, const std::vector<int>& y,
            std::vector<std::size_t>& idx, std::size_t begin, std::size_t end, int depth);
  ClassArray leaf_logits(const std::vector<int>& y, const std::vector<std::size_t>& idx,
                         std::size_t begin, std::size_t end) const;

  BaselineOptions options_;
  std::map<std::string, int> protocols_, services_, states_;
  std::vector<Node> nodes_;
  std::vector<std::string> warnings_;
};

}  // namespace edgeguard
