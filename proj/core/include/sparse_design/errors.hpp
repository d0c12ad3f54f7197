#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sparse_design {

enum class ErrorKind {
  invalid_argument,
  parse,
  data,
  numerical,
  conditioning,
  infeasible,
  format,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Base exception for all library failures. `kind()` gives a stable,
/// machine-readable category that the CLI prints ahead of the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace sparse_design
