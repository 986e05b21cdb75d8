#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace edgeguard {

struct BackendDescriptor {
  std::string name;
  std::string version;
};

/// Slot for the flow classifier: prompt text in, 21 raw logits out.
/// Implementations must be deterministic for a fixed model state.
class ClassifierBackend {
 public:
  virtual ~ClassifierBackend() = default;

  /// Returns raw logits; classify() checks the count and finiteness.
  virtual std::vector<double> logits(std::string_view prompt) const = 0;
  virtual BackendDescriptor descriptor() const = 0;
  /// True when logits() may be called from several threads at once.
  virtual bool concurrent_safe() const { return false; }
};

}  // namespace edgeguard
