#include "edgeguard/error.hpp"

namespace edgeguard {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::MalformedNumber: return "MalformedNumber";
    case ErrorCode::MalformedToken: return "MalformedToken";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::EmptyStream: return "EmptyStream";
    case ErrorCode::GrammarMismatch: return "GrammarMismatch";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::LabelUnknown: return "LabelUnknown";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::TooFewRecords: return "TooFewRecords";
    case ErrorCode::BadProportions: return "BadProportions";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::DegenerateTraining: return "DegenerateTraining";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::BackendMalformedOutput: return "BackendMalformedOutput";
    case ErrorCode::MissingSourceIp: return "MissingSourceIp";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::OutOfOrderWindow: return "OutOfOrderWindow";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::OutOfOrderEvents: return "OutOfOrderEvents";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, std::string message, std::string subject,
             std::optional<std::size_t> index)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      subject_(std::move(subject)),
      index_(index),
      message_(std::move(message)) {}

}  // namespace edgeguard
