#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace edgeguard {

/// Raw column name -> cell text, as read from a log row or prompt.
using FieldMap = std::map<std::string, std::string, std::less<>>;

/// One summarized network connection. Values are only produced by
/// validate_flow(), so a FlowRecord in hand always satisfies its invariants.
struct FlowRecord {
  std::optional<std::string> src_ip;
  std::optional<std::string> dst_ip;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::string protocol = "TCP";
  std::string duration = "0";  // decimal seconds, kept verbatim
  std::string service = "-";
  std::uint64_t orig_bytes = 0;
  std::uint64_t resp_bytes = 0;
  std::uint64_t missed_bytes = 0;
  std::uint64_t orig_ip_bytes = 0;
  std::uint64_t resp_ip_bytes = 0;
  std::uint64_t orig_pkts = 0;
  std::uint64_t resp_pkts = 0;
  std::string conn_state = "SF";
  std::optional<double> timestamp;

  double duration_seconds() const;

  friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

/// A flow paired with its ground-truth label id.
struct LabeledFlow {
  FlowRecord flow;
  int label = 0;

  friend bool operator==(const LabeledFlow&, const LabeledFlow&) = default;
};

namespace field {
inline constexpr std::string_view kSrcIp = "src_ip";
inline constexpr std::string_view kDstIp = "dst_ip";
inline constexpr std::string_view kSrcPort = "src_port";
inline constexpr std::string_view kDstPort = "dst_port";
inline constexpr std::string_view kProtocol = "protocol";
inline constexpr std::string_view kDuration = "duration";
inline constexpr std::string_view kService = "service";
inline constexpr std::string_view kOrigBytes = "orig_bytes";
inline constexpr std::string_view kRespBytes = "resp_bytes";
inline constexpr std::string_view kMissedBytes = "missed_bytes";
inline constexpr std::string_view kOrigIpBytes = "orig_ip_bytes";
inline constexpr std::string_view kRespIpBytes = "resp_ip_bytes";
inline constexpr std::string_view kOrigPkts = "orig_pkts";
inline constexpr std::string_view kRespPkts = "resp_pkts";
inline constexpr std::string_view kConnState = "conn_state";
inline constexpr std::string_view kTimestamp = "timestamp";
}  // namespace field

/// Every FlowRecord column in export order.
inline constexpr std::array<std::string_view, 16> kAllFlowFields = {
    field::kSrcIp,        field::kDstIp,       field::kSrcPort,    field::kDstPort,
    field::kProtocol,     field::kDuration,    field::kService,    field::kOrigBytes,
    field::kRespBytes,    field::kMissedBytes, field::kOrigIpBytes, field::kRespIpBytes,
    field::kOrigPkts,     field::kRespPkts,    field::kConnState,  field::kTimestamp};

/// The thirteen columns the prompt is built from (ports, protocol and the
/// eleven traffic fields); all are required by validate_flow.
inline constexpr std::array<std::string_view, 13> kRequiredFlowFields = {
    field::kSrcPort,     field::kDstPort,     field::kProtocol,   field::kDuration,
    field::kService,     field::kOrigBytes,   field::kRespBytes,  field::kMissedBytes,
    field::kOrigIpBytes, field::kRespIpBytes, field::kOrigPkts,   field::kRespPkts,
    field::kConnState};

/// Builds a FlowRecord from raw text fields.
///
/// Protocol is upper-cased; an empty service becomes "-". Tokens may not
/// contain whitespace or commas. Missing or empty src_ip/dst_ip/timestamp
/// are left absent.
///
/// Throws Error with MissingField, OutOfRange, MalformedNumber or
/// MalformedToken; `subject()` is the field name.
FlowRecord validate_flow(const FieldMap& raw);

/// Inverse of validate_flow: validate_flow(fields_of(r)) == r.
FieldMap fields_of(const FlowRecord& flow);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace edgeguard
