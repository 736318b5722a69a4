#pragma once

#include <stdexcept>
#include <string>

namespace riac {

// Each kind maps onto a distinct process exit code in the CLI.
enum class ErrorKind { Usage, Parse, Io, Verification, Shape, Domain, Numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& w) : Error(ErrorKind::Usage, w) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& w) : Error(ErrorKind::Parse, w) {}
  ParseError(const std::string& file, std::size_t line, const std::string& w)
      : Error(ErrorKind::Parse, file + ":" + std::to_string(line) + ": " + w) {}
};

struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorKind::Io, w) {}
};

struct VerificationError : Error {
  explicit VerificationError(const std::string& w) : Error(ErrorKind::Verification, w) {}
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& w) : Error(ErrorKind::Shape, w) {}
};

// Preconditions on values: degenerate sequences, out-of-range labels, bad protocol names.
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorKind::Domain, w) {}
};

// Non-finite values or divergence during training.
struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error(ErrorKind::Numeric, w) {}
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return 2;
    case ErrorKind::Parse: return 3;
    case ErrorKind::Io: return 4;
    case ErrorKind::Verification: return 5;
    case ErrorKind::Shape:
    case ErrorKind::Domain: return 6;
    case ErrorKind::Numeric: return 7;
  }
  return 1;
}

}  // namespace riac
