#include <doctest.h>

#include "edgeguard/error.hpp"
#include "edgeguard/prompt.hpp"
#include "edgeguard/rng.hpp"
#include "edgeguard/synth.hpp"

using namespace edgeguard;

namespace {

FlowRecord http_flow() {
  FlowRecord f;
  f.src_port = 49864;
  f.dst_port = 80;
  f.protocol = "TCP";
  f.duration = "0.049751";
  f.service = "http";
  f.orig_bytes = 243;
  f.resp_bytes = 3440;
  f.missed_bytes = 0;
  f.orig_ip_bytes = 511;
  f.resp_ip_bytes = 3760;
  f.orig_pkts = 5;
  f.resp_pkts = 6;
  f.conn_state = "SF";
  return f;
}

std::size_t mismatch_at(std::string_view text) {
  try {
    parse_prompt(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GrammarMismatch);
    return e.index().value_or(9999);
  }
  FAIL("parsed");
  return 0;
}

}  // namespace

TEST_CASE("render matches the published example") {
  CHECK(render_prompt(http_flow()) ==
        "Traffic from Port 49864 to Port 80 over TCP Protocol. Duration: 0.049751s, Service: "
        "http, Bytes Sent: 243, Bytes Received: 3440, Missed Bytes: 0, Total IP Bytes Sent: 511, "
        "Total IP Bytes Received: 3760, Packets Sent: 5, Packets Received: 6, Connection State: SF");
}

TEST_CASE("parse inverts render") {
  CHECK(parse_prompt(render_prompt(http_flow())) == http_flow());
}

TEST_CASE("zero duration and dash service survive") {
  FlowRecord f = http_flow();
  f.duration = "0";
  f.service = "-";
  CHECK(parse_prompt(render_prompt(f)) == f);
}

TEST_CASE("mismatch offset points at the first bad character") {
  const std::string good = render_prompt(http_flow());
  CHECK(mismatch_at("Traffic to Port 80") == 8);
  std::string bad = good;
  bad.replace(bad.find("Port 80"), 7, "Port 8x");
  CHECK(mismatch_at(bad) == good.find("Port 80") + 6);
  CHECK(mismatch_at(good + " ") == good.size());
  CHECK(mismatch_at(good.substr(0, good.size() - 2)) == good.size() - 2);
}

TEST_CASE("leading zeros and out-of-range ports are rejected") {
  const std::string good = render_prompt(http_flow());
  std::string s = good;
  s.replace(s.find("49864"), 5, "049864");
  mismatch_at(s);
  s = good;
  s.replace(s.find("49864"), 5, "70000");
  mismatch_at(s);
}

TEST_CASE("synthetic flows round trip") {
  Rng rng(11);
  for (const auto& p : ProfileSet::builtin().profiles) {
    for (int i = 0; i < 50; ++i) {
      FlowRecord f = generate_flow(p, rng);
      f.src_ip.reset();
      f.dst_ip.reset();
      f.timestamp.reset();
      CHECK(parse_prompt(render_prompt(f)) == f);
    }
  }
}
