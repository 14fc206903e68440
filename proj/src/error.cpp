#include "paravec/error.hpp"

namespace paravec {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kAllTokensPruned: return "AllTokensPruned";
    case ErrorCode::kNonFiniteUpdate: return "NonFiniteUpdate";
    case ErrorCode::kEmptyAfterOov: return "EmptyAfterOOV";
    case ErrorCode::kSingleClass: return "SingleClass";
    case ErrorCode::kDegenerate: return "Degenerate";
    case ErrorCode::kNoNegativePool: return "NoNegativePool";
    case ErrorCode::kCorruptModel: return "CorruptModel";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kUnknownWord: return "UnknownWord";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

Error::Error(ErrorCode code, const std::string& message, std::uint64_t byte_offset)
    : std::runtime_error(std::string(to_string(code)) + ": " + message + " (at byte " +
                         std::to_string(byte_offset) + ")"),
      code_(code),
      offset_(byte_offset) {}

}  // namespace paravec
