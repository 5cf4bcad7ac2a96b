#pragma once

#include <string>
#include <vector>

namespace ntnpred {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,  // I/O errors and failed --assert-paper checks
    kExitConfig = 2,
    kExitNumerical = 3,
    kExitCheckpoint = 4,
};

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "NTNPRED_OUTPUT_DIR";

/// Parses and runs one command line; args[0] is the program name.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace ntnpred
