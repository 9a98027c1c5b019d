#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lyricforge {

enum class ErrorKind {
  format,       // malformed input record or file
  invariant,    // a domain invariant does not hold
  empty_input,  // nothing to operate on
  config,       // bad parameter value
  not_found,    // referenced id or file missing
  numeric,      // divergence or non-finite intermediate
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::format: return "format error";
    case ErrorKind::invariant: return "invariant error";
    case ErrorKind::empty_input: return "empty input";
    case ErrorKind::config: return "config error";
    case ErrorKind::not_found: return "not found";
    case ErrorKind::numeric: return "numeric error";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Error raised while reading a line-oriented file; carries the 1-based line.
class FormatError : public Error {
 public:
  FormatError(const std::string& source, std::size_t line, const std::string& message)
      : Error(ErrorKind::format, source + ":" + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace lyricforge
