#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tocdex {

enum class ErrorKind {
  MalformedInput,
  InvariantViolation,
  PreconditionViolation,
  NoRecognizableStructure,
  UnboundPlaceholder,
  TransportError,
  EmptyReply,
  SchemaViolation,
  NoTocFound,
  NotFound,
  StorageCorrupt,
  ConfigError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedInput: return "MalformedInput";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::PreconditionViolation: return "PreconditionViolation";
    case ErrorKind::NoRecognizableStructure: return "NoRecognizableStructure";
    case ErrorKind::UnboundPlaceholder: return "UnboundPlaceholder";
    case ErrorKind::TransportError: return "TransportError";
    case ErrorKind::EmptyReply: return "EmptyReply";
    case ErrorKind::SchemaViolation: return "SchemaViolation";
    case ErrorKind::NoTocFound: return "NoTocFound";
    case ErrorKind::NotFound: return "NotFound";
    case ErrorKind::StorageCorrupt: return "StorageCorrupt";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure surfaced by the library. `stage` names the pipeline step
/// that raised it (empty outside the pipeline); `details` carries
/// per-line diagnostics where a parser produced them.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message,
        std::vector<std::string> details = {})
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind), message_(message), details_(std::move(details)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& message() const noexcept { return message_; }
  const std::vector<std::string>& details() const noexcept { return details_; }
  const std::string& stage() const noexcept { return stage_; }

  Error with_stage(std::string stage) const {
    Error copy(kind_, "[" + stage + "] " + message_, details_);
    copy.stage_ = std::move(stage);
    return copy;
  }

private:
  ErrorKind kind_;
  std::string message_;
  std::vector<std::string> details_;
  std::string stage_;
};

}  // namespace tocdex
