#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include "fragopt/config.hpp"

namespace fragopt {

inline constexpr std::string_view kVersion = "0.1.0";

enum ExitCode { kExitOk = 0, kExitValidation = 2, kExitNumerical = 3 };

/// Runs one command from an already parsed config. config_text is hashed into
/// the manifest. Summary lines go to `out`, diagnostics to `err`.
int run(Command command, const RunConfig& config, std::string_view config_text, std::ostream& out,
        std::ostream& err);

/// `fragopt <command> --config FILE [--seed N] [--out DIR]`
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fragopt
