#pragma once

#include <string>
#include <string_view>

#include "edgeguard/flow.hpp"

namespace edgeguard {

/// Renders the single-line prompt a classifier consumes:
///
///   Traffic from Port {src_port} to Port {dst_port} over {protocol} Protocol.
///   Duration: {duration}s, Service: {service}, Bytes Sent: {orig_bytes},
///   Bytes Received: {resp_bytes}, Missed Bytes: {missed_bytes},
///   Total IP Bytes Sent: {orig_ip_bytes}, Total IP Bytes Received:
///   {resp_ip_bytes}, Packets Sent: {orig_pkts}, Packets Received:
///   {resp_pkts}, Connection State: {conn_state}
///
/// (one line, single spaces, no trailing whitespace). This string is the wire
/// contract for remote model servers.
std::string render_prompt(const FlowRecord& flow);

/// Parses a rendered prompt back into a FlowRecord (IPs and timestamp
/// absent). Throws Error(GrammarMismatch) whose index() is the offset of the
/// first character that does not fit the template.
FlowRecord parse_prompt(std::string_view text);

}  // namespace edgeguard
