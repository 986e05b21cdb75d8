#include <doctest.h>

#include "edgeguard/delimited.hpp"
#include "edgeguard/error.hpp"
#include "edgeguard/flow.hpp"

using namespace edgeguard;

namespace {

FieldMap sample_fields() {
  return {{"src_port", "49864"},    {"dst_port", "80"},        {"protocol", "tcp"},
          {"duration", "0.049751"}, {"service", "http"},       {"orig_bytes", "243"},
          {"resp_bytes", "3440"},   {"missed_bytes", "0"},     {"orig_ip_bytes", "511"},
          {"resp_ip_bytes", "3760"}, {"orig_pkts", "5"},       {"resp_pkts", "6"},
          {"conn_state", "SF"}};
}

ErrorCode code_of(const FieldMap& m) {
  try {
    validate_flow(m);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error");
  return ErrorCode::EmptyStream;
}

}  // namespace

TEST_CASE("validate_flow normalizes protocol and keeps optional columns absent") {
  const FlowRecord f = validate_flow(sample_fields());
  CHECK(f.protocol == "TCP");
  CHECK(f.src_port == 49864);
  CHECK(f.orig_ip_bytes == 511);
  CHECK(f.duration == "0.049751");
  CHECK(f.duration_seconds() == doctest::Approx(0.049751));
  CHECK_FALSE(f.src_ip.has_value());
  CHECK_FALSE(f.timestamp.has_value());
}

TEST_CASE("empty service becomes a dash") {
  auto m = sample_fields();
  m["service"] = "";
  CHECK(validate_flow(m).service == "-");
}

TEST_CASE("validate_flow error codes name the field") {
  auto m = sample_fields();
  m.erase("resp_pkts");
  CHECK(code_of(m) == ErrorCode::MissingField);
  try {
    validate_flow(m);
  } catch (const Error& e) {
    CHECK(e.subject() == "resp_pkts");
  }

  m = sample_fields();
  m["dst_port"] = "65536";
  CHECK(code_of(m) == ErrorCode::OutOfRange);

  m = sample_fields();
  m["orig_bytes"] = "-3";
  CHECK(code_of(m) == ErrorCode::OutOfRange);

  m = sample_fields();
  m["orig_bytes"] = "12a";
  CHECK(code_of(m) == ErrorCode::MalformedNumber);

  m = sample_fields();
  m["duration"] = "1e3";
  CHECK(code_of(m) == ErrorCode::MalformedNumber);

  m = sample_fields();
  m["service"] = "two words";
  CHECK(code_of(m) == ErrorCode::MalformedToken);

  m = sample_fields();
  m["conn_state"] = "S,F";
  CHECK(code_of(m) == ErrorCode::MalformedToken);
}

TEST_CASE("fields_of inverts validate_flow including optional columns") {
  auto m = sample_fields();
  m["src_ip"] = "192.168.1.7";
  m["timestamp"] = "1525879831.015811";
  const FlowRecord f = validate_flow(m);
  REQUIRE(f.timestamp.has_value());
  CHECK(validate_flow(fields_of(f)) == f);
}

TEST_CASE("format_double round trips") {
  for (double v : {0.0, 0.1, 1.0 / 3.0, 1525879831.015811, 1e-300, 287.82}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("split_delimited handles quotes") {
  std::vector<std::string> cells;
  REQUIRE(split_delimited(R"(a,"b,c","d""e",)", ',', cells));
  REQUIRE(cells.size() == 4);
  CHECK(cells[1] == "b,c");
  CHECK(cells[2] == "d\"e");
  CHECK(cells[3].empty());
  CHECK_FALSE(split_delimited(R"(a,"open)", ',', cells));
  CHECK(quote_cell("x,y", ',') == "\"x,y\"");
  CHECK(quote_cell("plain", ',') == "plain");
}
