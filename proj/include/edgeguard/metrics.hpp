#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>

#include "edgeguard/taxonomy.hpp"

namespace edgeguard {

using ClassArray = std::array<double, kNumClasses>;

/// Raw per-class scores; element i belongs to label i + 1.
class Logits {
 public:
  /// Throws BackendMalformedOutput on a length other than 21 and
  /// NonFiniteInput on NaN/inf entries.
  explicit Logits(std::span<const double> values);
  Logits() { values_.fill(0.0); }

  const ClassArray& values() const noexcept { return values_; }
  double for_label(int label) const { return values_.at(static_cast<std::size_t>(label - 1)); }

 private:
  ClassArray values_;
};

/// Point on the 21-class simplex. The log-probabilities are kept alongside
/// so losses stay finite even where a probability underflows.
class ProbabilityVector {
 public:
  /// Validates entries in [0,1] summing to 1 within 1e-9.
  static ProbabilityVector from_values(std::span<const double> probs);

  const ClassArray& values() const noexcept { return probs_; }
  const ClassArray& log_values() const noexcept { return log_probs_; }
  double for_label(int label) const { return probs_.at(static_cast<std::size_t>(label - 1)); }

 private:
  friend ProbabilityVector softmax(const Logits& z);
  ClassArray probs_{};
  ClassArray log_probs_{};
};

/// exp(z_i) / sum_j exp(z_j), evaluated after subtracting max(z).
ProbabilityVector softmax(const Logits& z);

/// Label id of the largest entry; ties go to the lowest label id.
int predict(const ProbabilityVector& p);
int argmax_label(const ClassArray& values);

/// -log p[true_label], read from the stabilized log-probabilities.
double cross_entropy(int true_label, const ProbabilityVector& p);

/// 21x21 counts, row = true label, column = predicted label.
class ConfusionMatrix {
 public:
  using Counts = std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses>;

  ConfusionMatrix() : counts_{} {}

  void add(int true_label, int predicted_label, std::uint64_t n = 1);
  std::uint64_t at(int true_label, int predicted_label) const;
  const Counts& counts() const noexcept { return counts_; }
  std::uint64_t total() const noexcept { return total_; }

  std::uint64_t true_positives(int label) const;
  std::uint64_t false_positives(int label) const;
  std::uint64_t false_negatives(int label) const;

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  Counts counts_;
  std::uint64_t total_ = 0;
};

/// 2*sum(TP) / (2*sum(TP) + sum(FP) + sum(FN)). Throws EmptyMatrix.
double micro_f1(const ConfusionMatrix& cm);

struct MicroScores {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// trace/total, sum(TP)/(sum(TP)+sum(FP)), sum(TP)/(sum(TP)+sum(FN)).
/// Throws EmptyMatrix.
MicroScores accuracy_precision_recall(const ConfusionMatrix& cm);

struct MetricsReport {
  std::string model = "baseline";
  std::uint64_t samples = 0;
  double accuracy = 0.0;
  double micro_f1 = 0.0;
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double mean_cross_entropy = 0.0;  // nats
  std::optional<double> energy_j_per_req;
  double throughput_req_per_sec = 0.0;
  std::optional<double> train_loss;
  std::optional<double> validation_loss;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Flat `key=value` lines using the field names above; absent optionals are
/// omitted.
void write_key_values(std::ostream& out, const MetricsReport& report);
MetricsReport read_key_values(std::istream& in);

/// One row in the layout of the classic results table: model, losses,
/// accuracy/F1/precision/recall as percentages, J/Req, Req/Sec.
std::string results_table_header();
std::string results_table_row(const MetricsReport& report);

}  // namespace edgeguard
