#pragma once

#include <stdexcept>
#include <string>

namespace r2c {

enum class Errc {
  MissingDirectory,
  EmptyCategory,
  InsufficientReferences,
  WriteFailure,
  ReadFailure,
  EmptyMask,
  EmptyList,
  ProviderUnavailable,
  BadShape,
  ShapeMismatch,
  NonFiniteLoss,
  Config,
};

const char* to_string(Errc code);

/// Single exception type for the library; `code()` tells callers (and the
/// CLI exit-code mapping) what went wrong.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace r2c
