#pragma once

#include <stdexcept>
#include <string>

namespace redispatch {

/// Failure categories. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
  invalid_input,
  parse,
  singular_matrix,
  power_flow_divergence,
  opf_failure,
  player_cap_exceeded,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by the MATPOWER reader; carries the 1-based source line.
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error(ErrorKind::parse, "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace redispatch
