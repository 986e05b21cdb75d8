#include "edgeguard/prompt.hpp"

#include <cctype>
#include <charconv>
#include <limits>

#include "edgeguard/error.hpp"

namespace edgeguard {

std::string render_prompt(const FlowRecord& f) {
  std::string s;
  s.reserve(320);
  s += "Traffic from Port ";
  s += std::to_string(f.src_port);
  s += " to Port ";
  s += std::to_string(f.dst_port);
  s += " over ";
  s += f.protocol;
  s += " Protocol. Duration: ";
  s += f.duration;
  s += "s, Service: ";
  s += f.service;
  s += ", Bytes Sent: ";
  s += std::to_string(f.orig_bytes);
  s += ", Bytes Received: ";
  s += std::to_string(f.resp_bytes);
  s += ", Missed Bytes: ";
  s += std::to_string(f.missed_bytes);
  s += ", Total IP Bytes Sent: ";
  s += std::to_string(f.orig_ip_bytes);
  s += ", Total IP Bytes Received: ";
  s += std::to_string(f.resp_ip_bytes);
  s += ", Packets Sent: ";
  s += std::to_string(f.orig_pkts);
  s += ", Packets Received: ";
  s += std::to_string(f.resp_pkts);
  s += ", Connection State: ";
  s += f.conn_state;
  return s;
}

namespace {

class PromptParser {
 public:
  explicit PromptParser(std::string_view text) : text_(text) {}

  [[noreturn]] void fail(std::size_t at, const std::string& what) const {
    throw Error(ErrorCode::GrammarMismatch,
                "prompt does not match template at offset " + std::to_string(at) + ": " + what,
                std::string(text_), at);
  }

  void literal(std::string_view lit) {
    for (std::size_t i = 0; i < lit.size(); ++i) {
      if (pos_ + i >= text_.size() || text_[pos_ + i] != lit[i]) {
        fail(pos_ + i, "expected \"" + std::string(lit) + "\"");
      }
    }
    pos_ += lit.size();
  }

  std::uint64_t integer(std::uint64_t max_value) {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ == start) fail(start, "expected digits");
    // Rendered integers never carry leading zeros.
    if (text_[start] == '0' && pos_ - start > 1) fail(start + 1, "leading zero");
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (ec != std::errc() || v > max_value) fail(start, "integer out of range");
    return v;
  }

  std::string decimal() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t s = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      return pos_ - s;
    };
    if (digits() == 0) fail(start, "expected non-negative decimal");
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      if (digits() == 0) fail(pos_, "expected fraction digits");
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  // A token runs up to the next occurrence of `terminator` (or end of text
  // when the terminator is empty) and may not contain whitespace or ','.
  std::string token(std::string_view terminator) {
    const std::size_t start = pos_;
    std::size_t end = terminator.empty() ? text_.size() : text_.find(terminator, pos_);
    if (end == std::string_view::npos) end = text_.size();
    for (std::size_t i = start; i < end; ++i) {
      unsigned char c = static_cast<unsigned char>(text_[i]);
      if (std::isspace(c) || c == ',' || std::iscntrl(c)) fail(i, "invalid token character");
    }
    if (end == start) fail(start, "empty token");
    pos_ = end;
    return std::string(text_.substr(start, end - start));
  }

  void finish() const {
    if (pos_ != text_.size()) fail(pos_, "trailing characters");
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

FlowRecord parse_prompt(std::string_view text) {
  constexpr auto kPortMax = std::numeric_limits<std::uint16_t>::max();
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  PromptParser p(text);
  FlowRecord f;
  p.literal("Traffic from Port ");
  f.src_port = static_cast<std::uint16_t>(p.integer(kPortMax));
  p.literal(" to Port ");
  f.dst_port = static_cast<std::uint16_t>(p.integer(kPortMax));
  p.literal(" over ");
  f.protocol = p.token(" Protocol. Duration: ");
  for (char& c : f.protocol) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  p.literal(" Protocol. Duration: ");
  f.duration = p.decimal();
  p.literal("s, Service: ");
  f.service = p.token(", Bytes Sent: ");
  p.literal(", Bytes Sent: ");
  f.orig_bytes = p.integer(kMax);
  p.literal(", Bytes Received: ");
  f.resp_bytes = p.integer(kMax);
  p.literal(", Missed Bytes: ");
  f.missed_bytes = p.integer(kMax);
  p.literal(", Total IP Bytes Sent: ");
  f.orig_ip_bytes = p.integer(kMax);
  p.literal(", Total IP Bytes Received: ");
  f.resp_ip_bytes = p.integer(kMax);
  p.literal(", Packets Sent: ");
  f.orig_pkts = p.integer(kMax);
  p.literal(", Packets Received: ");
  f.resp_pkts = p.integer(kMax);
  p.literal(", Connection State: ");
  f.conn_state = p.token({});
  p.finish();
  return f;
}

}  // namespace edgeguard
