#include "lpq/error.hpp"

namespace lpq {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::InvalidScheme: return "InvalidScheme";
    case ErrorKind::InvalidCode: return "InvalidCode";
    case ErrorKind::PayloadMismatch: return "PayloadMismatch";
    case ErrorKind::ScaleOverflow: return "ScaleOverflow";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::PathUnavailable: return "PathUnavailable";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorKind::TruncatedPayload: return "TruncatedPayload";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::UsageError: return "UsageError";
  }
  return "Unknown";
}

}  // namespace lpq
