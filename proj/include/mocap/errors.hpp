#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mocap {

/// Failure categories shared by the library and the CLI exit codes.
enum class ErrorKind {
  dimension,         // shape or size mismatch
  domain,            // value outside an operation's domain
  degenerate_frame,  // frame cannot be normalized
  argument,          // invalid argument to an operation
  numeric,           // non-finite value during computation
  data,              // inconsistent dataset content
  format,            // malformed file or config text
  version,           // checkpoint version or shape mismatch on load
  io,                // missing or unreadable file
};

std::string_view error_kind_name(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace mocap
