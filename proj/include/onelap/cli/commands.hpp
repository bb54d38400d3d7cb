#pragma once

#include <cstddef>
#include <string>

#include "onelap/cli/config.hpp"

namespace onelap::cli {

enum ExitCode : int {
    kSuccess = 0,
    kInvalidConfig = 1,
    kNonconvergence = 2,
    kVerificationFailure = 3,
};

struct RunOptions {
    std::string command;  // exact | solve | verify | sweep
    Config config = Config::defaults();
    std::string out_dir = "onelap-out";
    bool force = false;
    std::size_t workers = 1;
};

/// Runs one command and writes its outputs. Returns an ExitCode; invalid
/// configurations are reported on stderr before anything is written.
int execute(const RunOptions& options);

/// Full command-line entry point.
int run(int argc, char** argv);

}  // namespace onelap::cli
