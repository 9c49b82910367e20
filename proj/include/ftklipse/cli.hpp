#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "ftklipse/error.hpp"

namespace ftk {

enum ExitCode : int {
    kExitOk = 0,
    kExitValidation = 1,
    kExitIntegrity = 2,
    kExitIo = 3,
};

int exit_code_for(ErrorCode code) noexcept;

/// `ftklipse <noun> <verb> [flags]`. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ftk
