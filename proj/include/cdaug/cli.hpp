#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include "cdaug/error.hpp"

namespace cdaug {

/// Process exit codes of the cdaug tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitValidation = 3,
  kExitTransport = 4,
  kExitJobFailed = 5,
};

int exit_code_for(ErrorKind kind);

/// Runs one cdaug invocation. `args` excludes the program name.
int cli_dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace cdaug
