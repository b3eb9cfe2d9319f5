#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mtprompt {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input record. `line()` is 1-based, 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class EmptyPoolError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Backend failures.

/// Transport-level failure after all retries were spent.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int attempts)
      : Error(what + " (after " + std::to_string(attempts) + " attempts)"), attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

/// The peer answered, but not according to the wire contract.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class ContextOverflowError : public Error {
 public:
  using Error::Error;
};

/// A scorer (embedding, QE, COMET) is unreachable. Callers mark the value missing.
class ScorerUnavailableError : public Error {
 public:
  using Error::Error;
};

/// Strict mock asked for something it has no table entry for.
class MockMissError : public Error {
 public:
  using Error::Error;
};

/// Cosine of a zero-norm vector.
class UndefinedSimilarityError : public Error {
 public:
  using Error::Error;
};

/// Correlation over a constant variable.
class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

}  // namespace mtprompt
