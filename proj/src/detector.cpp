#include "edgeguard/detector.hpp"

#include <chrono>
#include <exception>
#include <thread>

#include "edgeguard/error.hpp"
#include "edgeguard/prompt.hpp"

namespace edgeguard {

namespace {

double steady_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

Prediction classify(const FlowRecord& flow, const ClassifierBackend& backend) {
  const std::string prompt = render_prompt(flow);
  const double start = steady_seconds();
  std::vector<double> raw = backend.logits(prompt);
  const double latency = steady_seconds() - start;

  Logits z;
  try {
    z = Logits(raw);
  } catch (const Error& e) {
    throw Error(ErrorCode::BackendMalformedOutput,
                backend.descriptor().name + " returned unusable logits: " + e.what(),
                backend.descriptor().name, e.index());
  }
  Prediction p{z, softmax(z), 0, latency};
  p.predicted = predict(p.probs);
  return p;
}

Evaluation evaluate(const LabeledDataset& test, const ClassifierBackend& backend,
                    const EvaluateOptions& options) {
  const std::size_t n = test.size();
  if (n == 0) throw Error(ErrorCode::EmptyDataset, "test set is empty");
  auto clock = options.clock ? options.clock : steady_seconds;

  std::vector<int> predicted(n, 0);
  std::vector<double> losses(n, 0.0);
  auto run_one = [&](std::size_t i) {
    try {
      Prediction p = classify(test.records[i].flow, backend);
      predicted[i] = p.predicted;
      losses[i] = cross_entropy(test.records[i].label, p.probs);
    } catch (const Error& e) {
      throw Error(e.code(), "record " + std::to_string(i) + ": " + e.message(), e.subject(), i);
    }
  };

  const double start = clock();
  const unsigned threads = backend.concurrent_safe() ? std::max(1u, options.threads) : 1u;
  if (threads == 1 || n < 2 * threads) {
    for (std::size_t i = 0; i < n; ++i) run_one(i);
  } else {
    std::vector<std::exception_ptr> failures(threads);
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < n; i += threads) run_one(i);
        } catch (...) {
          failures[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    // Report the failure with the lowest record index, like the serial path.
    std::exception_ptr first;
    std::size_t first_index = n;
    for (auto& f : failures) {
      if (!f) continue;
      try {
        std::rethrow_exception(f);
      } catch (const Error& e) {
        if (e.index().value_or(n) < first_index) {
          first_index = e.index().value_or(n);
          first = f;
        }
      } catch (...) {
        if (!first) first = f;
      }
    }
    if (first) std::rethrow_exception(first);
  }
  const double elapsed = clock() - start;

  Evaluation ev;
  double loss_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ev.confusion.add(test.records[i].label, predicted[i]);
    loss_sum += losses[i];
  }
  ev.predictions = std::move(predicted);

  MetricsReport& r = ev.report;
  r.model = options.model_name.empty() ? backend.descriptor().name : options.model_name;
  r.samples = n;
  const MicroScores scores = accuracy_precision_recall(ev.confusion);
  r.accuracy = scores.accuracy;
  r.micro_precision = scores.precision;
  r.micro_recall = scores.recall;
  r.micro_f1 = micro_f1(ev.confusion);
  r.mean_cross_entropy = loss_sum / static_cast<double>(n);
  r.throughput_req_per_sec = elapsed > 0.0 ? static_cast<double>(n) / elapsed : 0.0;
  if (options.energy_source) {
    double joules = 0.0;
    for (std::size_t i = 0; i < n; ++i) joules += options.energy_source(i);
    r.energy_j_per_req = joules / static_cast<double>(n);
  }
  return ev;
}

}  // namespace edgeguard
