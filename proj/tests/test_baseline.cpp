#include <doctest.h>

#include <cmath>
#include <limits>

#include "edgeguard/baseline.hpp"
#include "edgeguard/detector.hpp"
#include "edgeguard/error.hpp"
#include "edgeguard/prompt.hpp"
#include "edgeguard/synth.hpp"

using namespace edgeguard;

namespace {

class FixedBackend final : public ClassifierBackend {
 public:
  explicit FixedBackend(std::vector<double> out) : out_(std::move(out)) {}
  std::vector<double> logits(std::string_view) const override { return out_; }
  BackendDescriptor descriptor() const override { return {"fixed", "0"}; }

 private:
  std::vector<double> out_;
};

LabeledDataset single_class(int label, std::size_t n) {
  LabeledDataset d = synthesize({{label, 1.0}}, n, 1);
  return d;
}

}  // namespace

TEST_CASE("empty training set is degenerate") {
  try {
    BaselineBackend::fit(LabeledDataset{});
    FAIL("fit accepted an empty set");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateTraining);
  }
}

TEST_CASE("single-class training yields smoothed constant logits") {
  const BaselineBackend b = BaselineBackend::fit(single_class(10, 40));
  CHECK(b.warnings().size() == 1);
  CHECK(b.node_count() == 1);
  const LabeledDataset probe = synthesize(uniform_proportions(), 30, 2);
  for (const auto& r : probe.records) {
    const ClassArray z = b.logits_for(r.flow);
    CHECK(z[9] == doctest::Approx(std::log(40.5 / 50.5)));
    CHECK(z[0] == doctest::Approx(std::log(0.5 / 50.5)));
  }
}

TEST_CASE("logits from the prompt equal logits from the record") {
  const LabeledDataset train = synthesize(uniform_proportions(), 2100, 4);
  const BaselineBackend b = BaselineBackend::fit(train);
  CHECK(b.leaf_count() * 2 - 1 == b.node_count());
  CHECK(b.depth() <= 16);
  for (std::size_t i = 0; i < 50; ++i) {
    const FlowRecord& f = train.records[i].flow;
    const std::vector<double> via_prompt = b.logits(render_prompt(f));
    const ClassArray direct = b.logits_for(f);
    REQUIRE(via_prompt.size() == 21);
    for (std::size_t c = 0; c < 21; ++c) CHECK(via_prompt[c] == direct[c]);
  }
}

TEST_CASE("training accuracy on separable data") {
  const LabeledDataset train = synthesize(uniform_proportions(), 2100, 4);
  const BaselineBackend b = BaselineBackend::fit(train);
  const Evaluation ev = evaluate(train, b);
  CHECK(ev.report.accuracy == 1.0);
}

TEST_CASE("max_samples subsampling is seeded") {
  const LabeledDataset train = synthesize(uniform_proportions(), 3000, 4);
  BaselineOptions o;
  o.max_samples = 500;
  o.seed = 9;
  const BaselineBackend a = BaselineBackend::fit(train, o);
  const BaselineBackend b = BaselineBackend::fit(train, o);
  CHECK(a.node_count() == b.node_count());
  for (std::size_t i = 0; i < 100; ++i) {
    CHECK(a.logits_for(train.records[i].flow) == b.logits_for(train.records[i].flow));
  }
}

TEST_CASE("unparseable prompt") {
  const BaselineBackend b = BaselineBackend::fit(single_class(3, 5));
  CHECK_THROWS_AS(b.logits("hello"), Error);
}

TEST_CASE("classify rejects malformed backend output") {
  const FlowRecord f = synthesize(uniform_proportions(), 1, 1).records[0].flow;
  try {
    classify(f, FixedBackend(std::vector<double>(7, 0.0)));
    FAIL("7 logits accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BackendMalformedOutput);
  }
  std::vector<double> nan(21, 0.0);
  nan[3] = std::numeric_limits<double>::infinity();
  try {
    classify(f, FixedBackend(nan));
    FAIL("inf accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BackendMalformedOutput);
  }
}

TEST_CASE("evaluate with an injected clock and energy source") {
  const LabeledDataset test = synthesize(uniform_proportions(), 100, 8);
  std::vector<double> z(21, 0.0);
  z[2] = 5.0;  // always "benign"
  double t = 10.0;
  EvaluateOptions opt;
  opt.clock = [&t] {
    const double now = t;
    t += 0.5;
    return now;
  };
  opt.energy_source = [](std::size_t i) { return i % 2 ? 0.2 : 0.1; };
  const Evaluation ev = evaluate(test, FixedBackend(z), opt);
  CHECK(ev.report.samples == 100);
  CHECK(ev.report.throughput_req_per_sec == doctest::Approx(200.0));
  CHECK(ev.report.energy_j_per_req.value() == doctest::Approx(0.15));
  std::size_t benign = 0;
  for (const auto& r : test.records) benign += r.label == 3;
  CHECK(ev.report.accuracy == doctest::Approx(static_cast<double>(benign) / 100.0));
  CHECK(ev.report.model == "fixed");
}

TEST_CASE("parallel evaluation matches serial") {
  const LabeledDataset train = synthesize(uniform_proportions(), 2100, 4);
  const LabeledDataset test = synthesize(uniform_proportions(), 1000, 5);
  const BaselineBackend b = BaselineBackend::fit(train);
  EvaluateOptions par;
  par.threads = 4;
  const Evaluation a = evaluate(test, b);
  const Evaluation c = evaluate(test, b, par);
  CHECK(a.confusion == c.confusion);
  CHECK(a.predictions == c.predictions);
  CHECK(a.report.mean_cross_entropy == doctest::Approx(c.report.mean_cross_entropy));
}

TEST_CASE("evaluate errors carry the record index") {
  CHECK_THROWS_AS(evaluate(LabeledDataset{}, FixedBackend({})), Error);
  const LabeledDataset test = synthesize(uniform_proportions(), 3, 8);
  try {
    evaluate(test, FixedBackend({1.0, 2.0}));
    FAIL("bad backend accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BackendMalformedOutput);
    CHECK(e.index() == std::optional<std::size_t>(0));
  }
}
