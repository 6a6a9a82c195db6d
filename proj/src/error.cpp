#include "r2cnet/error.hpp"

namespace r2c {

const char* to_string(Errc code) {
  switch (code) {
    case Errc::MissingDirectory: return "MissingDirectory";
    case Errc::EmptyCategory: return "EmptyCategory";
    case Errc::InsufficientReferences: return "InsufficientReferences";
    case Errc::WriteFailure: return "WriteFailure";
    case Errc::ReadFailure: return "ReadFailure";
    case Errc::EmptyMask: return "EmptyMask";
    case Errc::EmptyList: return "EmptyList";
    case Errc::ProviderUnavailable: return "ProviderUnavailable";
    case Errc::BadShape: return "BadShape";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::Config: return "Config";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace r2c
