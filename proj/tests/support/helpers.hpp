#pragma once

#include <optional>

#include "paravec/error.hpp"

namespace helpers {

// Code of the paravec::Error thrown by f, or nullopt if it returns normally.
template <typename F>
std::optional<paravec::ErrorCode> error_code(F&& f) {
  try {
    f();
  } catch (const paravec::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace helpers
