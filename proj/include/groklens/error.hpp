#pragma once

#include <stdexcept>
#include <string>

namespace groklens {

// Process exit codes used by the CLI. Each error type maps to one of them.
enum class ExitCode : int {
  ok = 0,
  usage = 2,
  config = 3,
  data = 4,
  numerical = 5,
  io = 6,
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, ExitCode code)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config error: " + what, ExitCode::config) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error("shape error: " + what, ExitCode::numerical) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("domain error: " + what, ExitCode::numerical) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error("numerical error: " + what, ExitCode::numerical) {}
};

/// Malformed or missing input data (IDX files, CSV input).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error("data error: " + what, ExitCode::data) {}
};

/// IDX parse failure; carries the byte offset where parsing stopped.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : DataError(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io error: " + what, ExitCode::io) {}
};

}  // namespace groklens
