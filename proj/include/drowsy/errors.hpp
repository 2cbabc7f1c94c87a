#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace drowsy {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed record or missing field. Carries the 1-based input line when known.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what, std::optional<std::size_t> line = std::nullopt)
      : Error(line ? "line " + std::to_string(*line) + ": " + what : what), line_(line) {}

  std::optional<std::size_t> line() const { return line_; }

 private:
  std::optional<std::size_t> line_;
};

/// Syntactically valid record that violates a type invariant.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class OutOfOrder : public Error {
 public:
  using Error::Error;
};

class NoFace : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

/// Horizontal eye width collapsed; landmarks are corrupt, not closed.
class DegenerateEye : public Error {
 public:
  using Error::Error;
};

class EmptyWindow : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SourceUnavailable : public Error {
 public:
  using Error::Error;
};

class SinkBackpressure : public Error {
 public:
  using Error::Error;
};

class TargetOutOfRange : public Error {
 public:
  using Error::Error;
};

class InvalidScenario : public Error {
 public:
  using Error::Error;
};

class UnsortedEvents : public Error {
 public:
  using Error::Error;
};

}  // namespace drowsy
