#include "edgeguard/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

#include "edgeguard/error.hpp"
#include "edgeguard/flow.hpp"

namespace edgeguard {

namespace {

std::size_t slot(int label) {
  if (label < 1 || label > kNumClasses) {
    throw Error(ErrorCode::UnknownClass, "label id outside 1..21", std::to_string(label));
  }
  return static_cast<std::size_t>(label - 1);
}

}  // namespace

Logits::Logits(std::span<const double> values) {
  if (values.size() != static_cast<std::size_t>(kNumClasses)) {
    throw Error(ErrorCode::BackendMalformedOutput,
                "expected 21 logits, got " + std::to_string(values.size()), {}, values.size());
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(ErrorCode::NonFiniteInput, "logit " + std::to_string(i + 1) + " is not finite",
                  {}, i);
    }
    values_[i] = values[i];
  }
}

ProbabilityVector ProbabilityVector::from_values(std::span<const double> probs) {
  if (probs.size() != static_cast<std::size_t>(kNumClasses)) {
    throw Error(ErrorCode::OutOfRange, "probability vector must have 21 entries");
  }
  ProbabilityVector p;
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] >= 0.0 && probs[i] <= 1.0)) {
      throw Error(ErrorCode::OutOfRange, "probability outside [0,1]", {}, i);
    }
    p.probs_[i] = probs[i];
    p.log_probs_[i] = std::log(probs[i]);
    sum += probs[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::OutOfRange, "probabilities sum to " + format_double(sum));
  }
  return p;
}

ProbabilityVector softmax(const Logits& z) {
  const ClassArray& v = z.values();
  const double m = *std::max_element(v.begin(), v.end());
  ProbabilityVector p;
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    p.probs_[i] = std::exp(v[i] - m);
    sum += p.probs_[i];
  }
  const double log_sum = std::log(sum);
  for (std::size_t i = 0; i < v.size(); ++i) {
    p.probs_[i] /= sum;
    p.log_probs_[i] = (v[i] - m) - log_sum;
  }
  return p;
}

int argmax_label(const ClassArray& values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return static_cast<int>(best) + 1;
}

int predict(const ProbabilityVector& p) { return argmax_label(p.values()); }

double cross_entropy(int true_label, const ProbabilityVector& p) {
  // -0.0 would print oddly for a perfect prediction.
  return std::max(0.0, -p.log_values()[slot(true_label)]);
}

void ConfusionMatrix::add(int true_label, int predicted_label, std::uint64_t n) {
  counts_[slot(true_label)][slot(predicted_label)] += n;
  total_ += n;
}

std::uint64_t ConfusionMatrix::at(int true_label, int predicted_label) const {
  return counts_[slot(true_label)][slot(predicted_label)];
}

std::uint64_t ConfusionMatrix::true_positives(int label) const {
  const auto i = slot(label);
  return counts_[i][i];
}

std::uint64_t ConfusionMatrix::false_positives(int label) const {
  const auto c = slot(label);
  std::uint64_t s = 0;
  for (std::size_t r = 0; r < counts_.size(); ++r) {
    if (r != c) s += counts_[r][c];
  }
  return s;
}

std::uint64_t ConfusionMatrix::false_negatives(int label) const {
  const auto r = slot(label);
  std::uint64_t s = 0;
  for (std::size_t c = 0; c < counts_.size(); ++c) {
    if (c != r) s += counts_[r][c];
  }
  return s;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  for (std::size_t r = 0; r < counts_.size(); ++r) {
    for (std::size_t c = 0; c < counts_.size(); ++c) counts_[r][c] += other.counts_[r][c];
  }
  total_ += other.total_;
  return *this;
}

namespace {

struct Sums {
  std::uint64_t tp = 0, fp = 0, fn = 0;
};

Sums micro_sums(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorCode::EmptyMatrix, "confusion matrix is empty");
  Sums s;
  for (int label = 1; label <= kNumClasses; ++label) {
    s.tp += cm.true_positives(label);
    s.fp += cm.false_positives(label);
    s.fn += cm.false_negatives(label);
  }
  return s;
}

}  // namespace

double micro_f1(const ConfusionMatrix& cm) {
  const Sums s = micro_sums(cm);
  const double tp2 = 2.0 * static_cast<double>(s.tp);
  return tp2 / (tp2 + static_cast<double>(s.fp) + static_cast<double>(s.fn));
}

MicroScores accuracy_precision_recall(const ConfusionMatrix& cm) {
  const Sums s = micro_sums(cm);
  const double tp = static_cast<double>(s.tp);
  MicroScores m;
  m.accuracy = tp / static_cast<double>(cm.total());
  m.precision = tp / (tp + static_cast<double>(s.fp));
  m.recall = tp / (tp + static_cast<double>(s.fn));
  return m;
}

void write_key_values(std::ostream& out, const MetricsReport& r) {
  out << "model=" << r.model << '\n'
      << "samples=" << r.samples << '\n'
      << "accuracy=" << format_double(r.accuracy) << '\n'
      << "micro_f1=" << format_double(r.micro_f1) << '\n'
      << "micro_precision=" << format_double(r.micro_precision) << '\n'
      << "micro_recall=" << format_double(r.micro_recall) << '\n'
      << "mean_cross_entropy=" << format_double(r.mean_cross_entropy) << '\n';
  if (r.energy_j_per_req) out << "energy_j_per_req=" << format_double(*r.energy_j_per_req) << '\n';
  out << "throughput_req_per_sec=" << format_double(r.throughput_req_per_sec) << '\n';
  if (r.train_loss) out << "train_loss=" << format_double(*r.train_loss) << '\n';
  if (r.validation_loss) out << "validation_loss=" << format_double(*r.validation_loss) << '\n';
}

MetricsReport read_key_values(std::istream& in) {
  MetricsReport r;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::SchemaMismatch, "expected key=value", line, row);
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "model") {
      r.model = value;
      continue;
    }
    auto number = [&]() {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw Error(ErrorCode::MalformedNumber, "bad value for " + key, key, row);
      }
      return v;
    };
    if (key == "samples") {
      r.samples = static_cast<std::uint64_t>(number());
    } else if (key == "accuracy") {
      r.accuracy = number();
    } else if (key == "micro_f1") {
      r.micro_f1 = number();
    } else if (key == "micro_precision") {
      r.micro_precision = number();
    } else if (key == "micro_recall") {
      r.micro_recall = number();
    } else if (key == "mean_cross_entropy") {
      r.mean_cross_entropy = number();
    } else if (key == "energy_j_per_req") {
      r.energy_j_per_req = number();
    } else if (key == "throughput_req_per_sec") {
      r.throughput_req_per_sec = number();
    } else if (key == "train_loss") {
      r.train_loss = number();
    } else if (key == "validation_loss") {
      r.validation_loss = number();
    } else {
      throw Error(ErrorCode::SchemaMismatch, "unknown key '" + key + "'", key, row);
    }
  }
  return r;
}

std::string results_table_header() {
  return "| Model | Train Loss | Validation Loss | Test Accuracy | Test F1-Score | Test Precision | "
         "Test Recall | Energy Consumption (J/Req) | Inference (Req/Sec) |";
}

std::string results_table_row(const MetricsReport& r) {
  auto fixed = [](double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return std::string(buf);
  };
  auto pct = [&](double v) { return fixed(100.0 * v, 2) + "%"; };
  auto opt = [&](const std::optional<double>& v, int digits) {
    return v ? fixed(*v, digits) : std::string("-");
  };
  return "| " + r.model + " | " + opt(r.train_loss, 4) + " | " + opt(r.validation_loss, 4) +
         " | " + pct(r.accuracy) + " | " + pct(r.micro_f1) + " | " + pct(r.micro_precision) +
         " | " + pct(r.micro_recall) + " | " + opt(r.energy_j_per_req, 4) + " | " +
         fixed(r.throughput_req_per_sec, 2) + " |";
}

}  // namespace edgeguard
