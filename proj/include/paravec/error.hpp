#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace paravec {

enum class ErrorCode {
  kInvalidArgument,
  kAllTokensPruned,
  kNonFiniteUpdate,
  kEmptyAfterOov,
  kSingleClass,
  kDegenerate,
  kNoNegativePool,
  kCorruptModel,
  kVersionMismatch,
  kUnknownWord,
  kIo,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library. The code identifies the failure
/// class; corrupt-file errors also carry the byte offset where parsing
/// stopped.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  Error(ErrorCode code, const std::string& message, std::uint64_t byte_offset);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::uint64_t> byte_offset() const noexcept { return offset_; }

 private:
  ErrorCode code_;
  std::optional<std::uint64_t> offset_;
};

}  // namespace paravec
