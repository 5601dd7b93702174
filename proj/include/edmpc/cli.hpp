#ifndef EDMPC_CLI_HPP
#define EDMPC_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace edmpc {

inline constexpr const char* kVersion = "0.1.0";

/// Exit codes shared by every subcommand.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitData = 2,
    kExitNumerical = 3,
};

/// Runs the command line `args` (without the program name). Subcommands:
/// simulate, scan, forecast, analyze, export-comparison, replay.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace edmpc

#endif
