#include "edgeguard/flow.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "edgeguard/error.hpp"

namespace edgeguard {

namespace {

const std::string* find_field(const FieldMap& raw, std::string_view name) {
  auto it = raw.find(name);
  return it == raw.end() ? nullptr : &it->second;
}

const std::string& require(const FieldMap& raw, std::string_view name) {
  const std::string* v = find_field(raw, name);
  if (v == nullptr) {
    throw Error(ErrorCode::MissingField, "missing field '" + std::string(name) + "'",
                std::string(name));
  }
  return *v;
}

std::uint64_t parse_unsigned(std::string_view name, std::string_view text,
                             std::uint64_t max_value) {
  if (!text.empty() && text.front() == '-' && text.size() > 1 &&
      std::all_of(text.begin() + 1, text.end(), [](unsigned char c) { return std::isdigit(c); })) {
    throw Error(ErrorCode::OutOfRange,
                std::string(name) + " must be non-negative, got " + std::string(text),
                std::string(name));
  }
  if (text.empty() || !std::all_of(text.begin(), text.end(),
                                   [](unsigned char c) { return std::isdigit(c); })) {
    throw Error(ErrorCode::MalformedNumber,
                std::string(name) + " is not an unsigned integer: '" + std::string(text) + "'",
                std::string(name));
  }
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec == std::errc::result_out_of_range || value > max_value) {
    throw Error(ErrorCode::OutOfRange,
                std::string(name) + " out of range: " + std::string(text), std::string(name));
  }
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::MalformedNumber, std::string(name) + " is malformed", std::string(name));
  }
  return value;
}

bool is_decimal(std::string_view text) {
  // digits, optionally followed by '.' and at least one digit
  std::size_t i = 0;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
  if (i == 0) return false;
  if (i == text.size()) return true;
  if (text[i] != '.') return false;
  std::size_t frac = ++i;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
  return i == text.size() && i > frac;
}

std::string validate_duration(std::string_view text) {
  if (!text.empty() && text.front() == '-' && is_decimal(text.substr(1))) {
    throw Error(ErrorCode::OutOfRange, "duration must be non-negative", "duration");
  }
  if (!is_decimal(text)) {
    throw Error(ErrorCode::MalformedNumber,
                "duration is not a decimal: '" + std::string(text) + "'", "duration");
  }
  double v = std::strtod(std::string(text).c_str(), nullptr);
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::OutOfRange, "duration is not finite", "duration");
  }
  return std::string(text);
}

std::string validate_token(std::string_view name, std::string_view text) {
  if (text.empty()) {
    throw Error(ErrorCode::MalformedToken, std::string(name) + " is empty", std::string(name));
  }
  for (unsigned char c : text) {
    if (std::isspace(c) || c == ',' || std::iscntrl(c)) {
      throw Error(ErrorCode::MalformedToken,
                  std::string(name) + " contains whitespace or ',': '" + std::string(text) + "'",
                  std::string(name));
    }
  }
  return std::string(text);
}

std::optional<std::string> optional_token(const FieldMap& raw, std::string_view name) {
  const std::string* v = find_field(raw, name);
  if (v == nullptr || v->empty()) return std::nullopt;
  return validate_token(name, *v);
}

}  // namespace

double FlowRecord::duration_seconds() const { return std::strtod(duration.c_str(), nullptr); }

FlowRecord validate_flow(const FieldMap& raw) {
  // Report the first missing field in prompt order before parsing anything.
  for (auto name : kRequiredFlowFields) require(raw, name);

  FlowRecord r;
  constexpr auto kPortMax = std::numeric_limits<std::uint16_t>::max();
  constexpr auto kCounterMax = std::numeric_limits<std::uint64_t>::max();
  r.src_port = static_cast<std::uint16_t>(
      parse_unsigned(field::kSrcPort, require(raw, field::kSrcPort), kPortMax));
  r.dst_port = static_cast<std::uint16_t>(
      parse_unsigned(field::kDstPort, require(raw, field::kDstPort), kPortMax));

  std::string proto = validate_token(field::kProtocol, require(raw, field::kProtocol));
  std::transform(proto.begin(), proto.end(), proto.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  r.protocol = std::move(proto);

  r.duration = validate_duration(require(raw, field::kDuration));

  const std::string& service = require(raw, field::kService);
  r.service = service.empty() ? "-" : validate_token(field::kService, service);

  r.orig_bytes = parse_unsigned(field::kOrigBytes, require(raw, field::kOrigBytes), kCounterMax);
  r.resp_bytes = parse_unsigned(field::kRespBytes, require(raw, field::kRespBytes), kCounterMax);
  r.missed_bytes =
      parse_unsigned(field::kMissedBytes, require(raw, field::kMissedBytes), kCounterMax);
  r.orig_ip_bytes =
      parse_unsigned(field::kOrigIpBytes, require(raw, field::kOrigIpBytes), kCounterMax);
  r.resp_ip_bytes =
      parse_unsigned(field::kRespIpBytes, require(raw, field::kRespIpBytes), kCounterMax);
  r.orig_pkts = parse_unsigned(field::kOrigPkts, require(raw, field::kOrigPkts), kCounterMax);
  r.resp_pkts = parse_unsigned(field::kRespPkts, require(raw, field::kRespPkts), kCounterMax);
  r.conn_state = validate_token(field::kConnState, require(raw, field::kConnState));

  r.src_ip = optional_token(raw, field::kSrcIp);
  r.dst_ip = optional_token(raw, field::kDstIp);

  if (const std::string* ts = find_field(raw, field::kTimestamp); ts != nullptr && !ts->empty()) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(ts->data(), ts->data() + ts->size(), v);
    if (ec == std::errc::result_out_of_range) {
      throw Error(ErrorCode::OutOfRange, "timestamp out of range", "timestamp");
    }
    if (ec != std::errc() || ptr != ts->data() + ts->size()) {
      throw Error(ErrorCode::MalformedNumber, "timestamp is malformed: '" + *ts + "'",
                  "timestamp");
    }
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorCode::OutOfRange, "timestamp must be finite and non-negative",
                  "timestamp");
    }
    r.timestamp = v;
  }
  return r;
}

FieldMap fields_of(const FlowRecord& flow) {
  FieldMap m;
  if (flow.src_ip) m.emplace(field::kSrcIp, *flow.src_ip);
  if (flow.dst_ip) m.emplace(field::kDstIp, *flow.dst_ip);
  m.emplace(field::kSrcPort, std::to_string(flow.src_port));
  m.emplace(field::kDstPort, std::to_string(flow.dst_port));
  m.emplace(field::kProtocol, flow.protocol);
  m.emplace(field::kDuration, flow.duration);
  m.emplace(field::kService, flow.service);
  m.emplace(field::kOrigBytes, std::to_string(flow.orig_bytes));
  m.emplace(field::kRespBytes, std::to_string(flow.resp_bytes));
  m.emplace(field::kMissedBytes, std::to_string(flow.missed_bytes));
  m.emplace(field::kOrigIpBytes, std::to_string(flow.orig_ip_bytes));
  m.emplace(field::kRespIpBytes, std::to_string(flow.resp_ip_bytes));
  m.emplace(field::kOrigPkts, std::to_string(flow.orig_pkts));
  m.emplace(field::kRespPkts, std::to_string(flow.resp_pkts));
  m.emplace(field::kConnState, flow.conn_state);
  if (flow.timestamp) m.emplace(field::kTimestamp, format_double(*flow.timestamp));
  return m;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace edgeguard
