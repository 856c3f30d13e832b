#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lpq {

enum class ErrorKind {
  InvalidInput,
  InvalidScheme,
  InvalidCode,
  PayloadMismatch,
  ScaleOverflow,
  ShapeError,
  PathUnavailable,
  BadMagic,
  UnsupportedVersion,
  TruncatedPayload,
  InvariantViolation,
  LengthMismatch,
  IoError,
  UsageError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// The single exception type thrown by the library. `kind()` is stable and
/// machine-readable; `what()` carries a human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace lpq
