#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace edgeguard {

enum class ErrorCode {
  // flow records and taxonomy
  MissingField,
  OutOfRange,
  MalformedNumber,
  MalformedToken,
  UnknownClass,
  EmptyStream,
  // prompt codec
  GrammarMismatch,
  // datasets
  SchemaMismatch,
  LabelUnknown,
  IoFailure,
  TooFewRecords,
  BadProportions,
  // detector
  NonFiniteInput,
  EmptyMatrix,
  EmptyDataset,
  DegenerateTraining,
  BackendUnavailable,
  BackendMalformedOutput,
  // prevention
  MissingSourceIp,
  EmptyWindow,
  OutOfOrderWindow,
  // simulation / telemetry
  ConfigInvalid,
  OutOfOrderEvents,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library. `subject` names the offending
/// field, value or node; `index` carries a character offset, row number or
/// record index depending on the code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string subject = {},
        std::optional<std::size_t> index = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  const std::string& subject() const noexcept { return subject_; }
  std::optional<std::size_t> index() const noexcept { return index_; }
  /// what() without the leading code name.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string subject_;
  std::optional<std::size_t> index_;
  std::string message_;
};

}  // namespace edgeguard
