#include <doctest.h>

#include <cstdlib>
#include <string>

#include "edgeguard/baseline.hpp"
#include "edgeguard/detector.hpp"
#include "edgeguard/error.hpp"
#include "edgeguard/prompt.hpp"
#include "edgeguard/remote.hpp"
#include "edgeguard/synth.hpp"

using namespace edgeguard;

TEST_CASE("logits line format") {
  std::vector<double> v(21);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = -0.1 * static_cast<double>(i) + 1e-17;
  CHECK(parse_logits_line(format_logits_line(v)) == v);
  CHECK(parse_logits_line("1 2 3\r").size() == 3);
  try {
    parse_logits_line("1 two 3");
    FAIL("accepted a word");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BackendMalformedOutput);
  }
}

TEST_CASE("remote backend over TCP gives the same predictions as in-process") {
  const BaselineBackend local = BaselineBackend::fit(synthesize(uniform_proportions(), 2100, 4));
  LineServer server(local);
  REQUIRE(server.port() != 0);
  const RemoteBackend remote("127.0.0.1:" + std::to_string(server.port()));
  const LabeledDataset test = synthesize(uniform_proportions(), 200, 5);
  const Evaluation a = evaluate(test, local);
  const Evaluation b = evaluate(test, remote);
  CHECK(a.predictions == b.predictions);
  CHECK(a.report.mean_cross_entropy == b.report.mean_cross_entropy);
  CHECK(server.requests_served() == 200);
  CHECK(remote.descriptor().name == "remote");
}

TEST_CASE("server answers malformed prompts with an error line") {
  const BaselineBackend local = BaselineBackend::fit(synthesize(uniform_proportions(), 210, 4));
  LineServer server(local);
  const RemoteBackend remote("127.0.0.1:" + std::to_string(server.port()));
  try {
    remote.logits("not a prompt");
    FAIL("error line accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BackendMalformedOutput);
  }
  // The connection stays usable.
  const FlowRecord f = synthesize(uniform_proportions(), 1, 1).records[0].flow;
  CHECK(remote.logits(render_prompt(f)).size() == 21);
}

TEST_CASE("unreachable server is BackendUnavailable") {
  RemoteOptions opt;
  opt.retries = 1;
  opt.timeout_ms = 200;
  const RemoteBackend remote("127.0.0.1:1", opt);
  try {
    remote.logits("x");
    FAIL("connected to port 1");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BackendUnavailable);
  }
}

TEST_CASE("exec transport speaks to a child process") {
  // A shell that answers every line with 21 logits favouring label 10.
  std::string line;
  for (int i = 1; i <= 21; ++i) line += (i == 10 ? "9" : "0") + std::string(i < 21 ? " " : "");
  const RemoteBackend remote("exec:while read -r l; do echo '" + line + "'; done");
  const FlowRecord f = synthesize(uniform_proportions(), 1, 1).records[0].flow;
  CHECK(classify(f, remote).predicted == 10);
  CHECK(classify(f, remote).predicted == 10);
}

TEST_CASE("exec child that exits is BackendUnavailable") {
  RemoteOptions opt;
  opt.retries = 1;
  opt.timeout_ms = 500;
  const RemoteBackend remote("exec:true", opt);
  try {
    remote.logits("x");
    FAIL("dead child answered");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BackendUnavailable);
  }
}

TEST_CASE("bad address") {
  CHECK_THROWS_AS(RemoteBackend("nonsense").logits("x"), Error);
}
