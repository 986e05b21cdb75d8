#pragma once

#include <functional>
#include <optional>

#include "edgeguard/backend.hpp"
#include "edgeguard/dataset.hpp"
#include "edgeguard/metrics.hpp"

namespace edgeguard {

struct Prediction {
  Logits logits;
  ProbabilityVector probs;
  int predicted = 0;
  double latency_seconds = 0.0;  // wall clock spent in the backend
};

/// Renders the prompt, asks the backend for logits, applies softmax and
/// argmax. Wrong logit count or non-finite logits raise
/// BackendMalformedOutput; transport failures surface as BackendUnavailable.
Prediction classify(const FlowRecord& flow, const ClassifierBackend& backend);

struct EvaluateOptions {
  std::string model_name;  // defaults to the backend descriptor name
  /// Seconds; defaults to a steady wall clock. Read once before the first
  /// and once after the last request.
  std::function<double()> clock;
  /// Joules consumed by request i. Absent: energy_j_per_req stays empty.
  std::function<double(std::size_t)> energy_source;
  /// Parallel classify calls, used only for concurrent_safe() backends.
  unsigned threads = 1;
};

struct Evaluation {
  ConfusionMatrix confusion;
  MetricsReport report;
  std::vector<int> predictions;  // per record, dataset order
};

/// One classify per record, aggregated into the confusion matrix and the
/// micro metrics. Backend errors are rethrown with the record index.
/// Throws EmptyDataset on an empty test set.
Evaluation evaluate(const LabeledDataset& test, const ClassifierBackend& backend,
                    const EvaluateOptions& options = {});

}  // namespace edgeguard
