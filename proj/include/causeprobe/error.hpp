#pragma once

#include <chrono>
#include <stdexcept>
#include <string>

namespace causeprobe {

// Base of every error raised by the library. kind() is a stable,
// machine-readable tag used in CLI error records.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define CAUSEPROBE_DEFINE_ERROR(Name, tag)                                  \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& message) : Error(tag, message) {}     \
  };

// Bad arguments: unknown variable, out-of-domain value, malformed spec.
CAUSEPROBE_DEFINE_ERROR(InputError, "input")
// Model structure violates an invariant (cycles, undeclared parents).
CAUSEPROBE_DEFINE_ERROR(StructuralError, "structural")
// Enumeration or combinatorial limit exceeded.
CAUSEPROBE_DEFINE_ERROR(CapacityError, "capacity")
// Conditioning on a zero-probability event.
CAUSEPROBE_DEFINE_ERROR(UndefinedConditionalError, "undefined-conditional")
// Request is well-formed but outside what is implemented.
CAUSEPROBE_DEFINE_ERROR(UnsupportedError, "unsupported")
// A file or record failed validation against its schema.
CAUSEPROBE_DEFINE_ERROR(ValidationError, "validation")
CAUSEPROBE_DEFINE_ERROR(ConfigError, "config")
CAUSEPROBE_DEFINE_ERROR(CorruptionError, "corruption")
CAUSEPROBE_DEFINE_ERROR(IoError, "io")
CAUSEPROBE_DEFINE_ERROR(TransportError, "transport")

#undef CAUSEPROBE_DEFINE_ERROR

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, std::size_t column,
             const std::string& message)
      : Error("parse", source + ":" + std::to_string(line) + ":" +
                           std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class ThrottledError : public Error {
 public:
  ThrottledError(const std::string& message, std::chrono::milliseconds retry_after)
      : Error("throttled", message), retry_after_(retry_after) {}

  std::chrono::milliseconds retry_after() const noexcept { return retry_after_; }

 private:
  std::chrono::milliseconds retry_after_;
};

}  // namespace causeprobe
