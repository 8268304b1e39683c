#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pbcplus {

enum class ErrorKind {
  Signature,
  Capacity,
  Conditioning,
  Parse,
  Validation,
  Assumption,
  Usage,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// An atom, constant or value that is not part of the governing signature.
class SignatureError : public Error {
 public:
  explicit SignatureError(const std::string& what)
      : Error(ErrorKind::Signature, "signature mismatch: " + what) {}
};

/// An exhaustive search would exceed a configured cap.
class CapacityError : public Error {
 public:
  CapacityError(const std::string& what, std::uint64_t cap)
      : Error(ErrorKind::Capacity,
              what + " (cap " + std::to_string(cap) + ")"),
        cap_(cap) {}

  std::uint64_t cap() const noexcept { return cap_; }

 private:
  std::uint64_t cap_;
};

/// Conditioning on evidence that no stable model satisfies.
class ConditioningError : public Error {
 public:
  explicit ConditioningError(const std::string& what)
      : Error(ErrorKind::Conditioning, "conditioning on impossible evidence: " + what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : Error(ErrorKind::Parse, std::to_string(line) + ":" +
                                    std::to_string(column) + ": " + message),
        message_(message),
        line_(line),
        column_(column) {}

  const std::string& message() const noexcept { return message_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::string message_;
  std::size_t line_;
  std::size_t column_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::Validation, what) {}
};

/// Raised when one of the transition-system assumptions does not hold.
/// The witness names the offending state/event/pf assignment.
class AssumptionError : public Error {
 public:
  AssumptionError(const std::string& what, std::string witness)
      : Error(ErrorKind::Assumption, what + ": " + witness),
        witness_(std::move(witness)) {}

  const std::string& witness() const noexcept { return witness_; }

 private:
  std::string witness_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

}  // namespace pbcplus
