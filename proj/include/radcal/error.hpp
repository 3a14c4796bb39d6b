#pragma once

#include <stdexcept>
#include <string>

namespace radcal {

enum class ErrorKind {
  Domain,
  InsufficientData,
  SingularGeometry,
  UnobservableScale,
  Parse,
  Validation,
  Alignment,
  Io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::SingularGeometry: return "singular-geometry";
    case ErrorKind::UnobservableScale: return "unobservable-scale";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Alignment: return "alignment";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the toolkit carries a kind so callers (the CLI in
/// particular) can map it onto a stable exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace radcal
