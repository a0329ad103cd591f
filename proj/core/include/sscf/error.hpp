#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sscf {

enum class ErrorKind {
  NotPositiveDefinite,
  NoConvergence,
  ParseError,
  AsymmetricInput,
  ZeroStartVector,
  IntervalTooSmall,
  DegenerateSpectrum,
  DimensionTooLarge,
  LengthMismatch,
  OverlapNotSPD,
  InvalidSystem,
  InvalidArgument,
  HistoryLengthMismatch,
  NonFiniteIterate,
  EmptyTrace,
  DivergentTail,
  WindowMismatch,
  InvalidCoefficients,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure raised by the library carries a kind so callers (and the CLI
// exit-code mapping) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace sscf
