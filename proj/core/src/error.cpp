#include "hopflab/error.hpp"

namespace hopflab {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::NotMonotone: return "NotMonotone";
    case ErrorCode::Divergent: return "Divergent";
    case ErrorCode::Tolerance: return "Tolerance";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::DegenerateProfile: return "DegenerateProfile";
    case ErrorCode::FrameMismatch: return "FrameMismatch";
    case ErrorCode::SmallnessViolated: return "SmallnessViolated";
    case ErrorCode::ResolutionError: return "ResolutionError";
    case ErrorCode::StencilMonotonicityViolated: return "StencilMonotonicityViolated";
    case ErrorCode::EllipticityViolated: return "EllipticityViolated";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::Misaligned: return "Misaligned";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::ChainBroken: return "ChainBroken";
    case ErrorCode::AdjustK0: return "AdjustK0";
    case ErrorCode::Divergence: return "Divergence";
    case ErrorCode::ScaleStarved: return "ScaleStarved";
    case ErrorCode::MissingNonDini: return "MissingNonDini";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::Divergent:
    case ErrorCode::Tolerance:
    case ErrorCode::NoConvergence:
    case ErrorCode::ChainBroken:
    case ErrorCode::Divergence:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace hopflab
