#pragma once

#include <stdexcept>
#include <string>

namespace qemine {

// Base of every error the library throws. The CLI maps UsageError to exit
// code 1 and everything else to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input line (wrong column count, unparseable number, bad label).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A numeric value outside its documented domain.
class RangeError : public Error {
 public:
  RangeError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit RangeError(const std::string& what) : Error(what), line_(0) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

// Structural problem in a file: duplicate ids, bad magic, wrong version.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Cross-reference failure, e.g. a gold link naming an unknown id.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

// Truncated or checksum-mismatched binary payload.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

// Invalid combination of configuration values or datasets.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller broke a documented precondition (dimension mismatch and the like).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Non-finite values encountered during optimization.
class TrainingError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace qemine
