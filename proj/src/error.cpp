#include "fragopt/error.hpp"

namespace fragopt {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::DivergentIntegral: return "DivergentIntegral";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::NoRoot: return "NoRoot";
    case ErrorCode::TruncationRequired: return "TruncationRequired";
    case ErrorCode::InconsistentSupport: return "InconsistentSupport";
    case ErrorCode::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorCode::SupportTooLarge: return "SupportTooLarge";
    case ErrorCode::InfiniteActivity: return "InfiniteActivity";
    case ErrorCode::ExplosionGuard: return "ExplosionGuard";
    case ErrorCode::NotRV: return "NotRV";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, std::string_view module, const std::string& message)
    : std::runtime_error(std::string(module) + ": " + std::string(to_string(code)) + ": " + message),
      code_(code),
      module_(module) {}

bool Error::is_validation() const noexcept {
  switch (code_) {
    case ErrorCode::InvalidModel:
    case ErrorCode::ConfigError:
    case ErrorCode::TruncationRequired:
    case ErrorCode::InfiniteActivity:
    case ErrorCode::NotRV:
      return true;
    default:
      return false;
  }
}

}  // namespace fragopt
