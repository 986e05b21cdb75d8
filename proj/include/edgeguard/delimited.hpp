#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace edgeguard {

/// Splits one delimited line. Double-quoted cells may contain the separator
/// and doubled quotes (""). Returns false on an unterminated quote.
bool split_delimited(std::string_view line, char sep, std::vector<std::string>& cells);

/// Quotes a cell only when it contains the separator, a quote or a newline.
std::string quote_cell(std::string_view cell, char sep);

}  // namespace edgeguard
