#pragma once

#include <stdexcept>
#include <string>

namespace fotd {

/// Failure categories surfaced by the solver layers. The numeric values are
/// mirrored by the C API status codes.
enum class ErrorCode {
  invalid_argument = 1,
  numeric = 2,
  linear_solver = 3,
  modification_failure = 4,
  mu_too_small = 5,
  non_descent = 6,
  line_search_failure = 7,
  adaptivity_failure = 8,
  subproblem_failure = 9,
  descent_assertion = 10,
  undefined_ratio = 11,
  io = 12,
};

const char *to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &what, int index = -1)
      : std::runtime_error(what), code_(code), index_(index) {}

  ErrorCode code() const noexcept { return code_; }
  /// Stage or subproblem index the failure refers to, -1 when not applicable.
  int index() const noexcept { return index_; }

private:
  ErrorCode code_;
  int index_;
};

[[noreturn]] inline void throw_invalid(const std::string &what) {
  throw Error(ErrorCode::invalid_argument, what);
}

} // namespace fotd
