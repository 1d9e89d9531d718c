#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ctxrace {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based, 0 when not applicable.
class ParseError : public Error {
  public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

/// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// Inconsistent or out-of-range configuration.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Operation called in the wrong state (e.g. step after done).
class ProtocolError : public Error {
  public:
    using Error::Error;
};

}  // namespace ctxrace
