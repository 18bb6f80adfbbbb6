#pragma once

#include <string>
#include <vector>

namespace rotalign::cli {

enum ExitCode : int { Success = 0, ConfigFailure = 2, NumericalFailure = 3, IoFailure = 4 };

/// Entry point of the `rotalign` executable; never throws.
int cli_main(int argc, const char* const* argv);

/// Convenience overload; args excludes the program name.
int cli_main(const std::vector<std::string>& args);

} // namespace rotalign::cli
