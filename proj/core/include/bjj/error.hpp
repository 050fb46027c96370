#pragma once

#include <stdexcept>
#include <string>

namespace bjj {

enum class ErrorCode {
  invalid_parameter,
  singularity,
  stiffness,
  precondition,
  domain,
  no_oscillation,
  too_few_extrema,
  inconclusive,
  guarded_estimate,
  config,
  io,
};

const char* to_string(ErrorCode code) noexcept;

/// Single exception type for the library; the code tells callers (and the CLI
/// exit-status mapping) which contract was violated.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace bjj
