#include "sscf/error.hpp"

namespace sscf {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::AsymmetricInput: return "AsymmetricInput";
    case ErrorKind::ZeroStartVector: return "ZeroStartVector";
    case ErrorKind::IntervalTooSmall: return "IntervalTooSmall";
    case ErrorKind::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorKind::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::OverlapNotSPD: return "OverlapNotSPD";
    case ErrorKind::InvalidSystem: return "InvalidSystem";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::HistoryLengthMismatch: return "HistoryLengthMismatch";
    case ErrorKind::NonFiniteIterate: return "NonFiniteIterate";
    case ErrorKind::EmptyTrace: return "EmptyTrace";
    case ErrorKind::DivergentTail: return "DivergentTail";
    case ErrorKind::WindowMismatch: return "WindowMismatch";
    case ErrorKind::InvalidCoefficients: return "InvalidCoefficients";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace sscf
