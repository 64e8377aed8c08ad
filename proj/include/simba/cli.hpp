#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace simba {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 2,      // bad flags, config, parse or dimension errors
    exit_numerical = 3,  // divergence, singular solves, aborted fits
};

/// Runs `simba <command> [flags]`; args exclude the program name.
/// SIMBA_OUT and SIMBA_SEED stand in for --out and --seed when those flags are absent.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Subcommands; args exclude the command name.
int cmd_fit(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cmd_simulate(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cmd_benchmark(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace simba
