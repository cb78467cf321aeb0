#pragma once

#include <stdexcept>
#include <string>

namespace wavetoken {

enum class ErrorKind {
  invalid_argument,
  unknown_family,
  too_short,
  non_finite,
  inconsistent,
  degenerate,
  format,
  version,
  io,
  fingerprint_mismatch,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid argument";
    case ErrorKind::unknown_family: return "unknown wavelet family";
    case ErrorKind::too_short: return "signal too short";
    case ErrorKind::non_finite: return "non-finite value";
    case ErrorKind::inconsistent: return "inconsistent input";
    case ErrorKind::degenerate: return "degenerate input";
    case ErrorKind::format: return "format error";
    case ErrorKind::version: return "version mismatch";
    case ErrorKind::io: return "i/o error";
    case ErrorKind::fingerprint_mismatch: return "fingerprint mismatch";
  }
  return "error";
}

/// Single exception type for the library; `kind()` distinguishes failure classes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace wavetoken
