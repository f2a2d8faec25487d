#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fragopt {

enum class ErrorCode {
  InvalidModel,
  DivergentIntegral,
  QuadratureFailure,
  NoRoot,
  TruncationRequired,
  InconsistentSupport,
  ResolutionTooCoarse,
  SupportTooLarge,
  InfiniteActivity,
  ExplosionGuard,
  NotRV,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Error raised by every module. The message is prefixed with the module name
/// so that CLI users can tell which stage failed.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string_view module, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  const std::string& module() const noexcept { return module_; }

  /// True for errors that come from bad inputs rather than numerics.
  bool is_validation() const noexcept;

 private:
  ErrorCode code_;
  std::string module_;
};

}  // namespace fragopt
