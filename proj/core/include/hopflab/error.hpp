#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hopflab {

enum class ErrorCode {
  NotNormalized,
  NotMonotone,
  Divergent,
  Tolerance,
  DomainError,
  DegenerateProfile,
  FrameMismatch,
  SmallnessViolated,
  ResolutionError,
  StencilMonotonicityViolated,
  EllipticityViolated,
  NoConvergence,
  Misaligned,
  EmptyRegion,
  OutOfDomain,
  ChainBroken,
  AdjustK0,
  Divergence,
  ScaleStarved,
  MissingNonDini,
  ConfigError,
};

std::string_view error_name(ErrorCode code);

// Numerical failures map to CLI exit code 3; everything else is a
// configuration/input problem (exit code 2).
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace hopflab
