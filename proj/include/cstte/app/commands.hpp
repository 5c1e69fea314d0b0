#pragma once

namespace cstte::app {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitOther = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

/// Parses arguments, runs one subcommand and maps failures to exit codes.
int run_cli(int argc, char** argv);

}  // namespace cstte::app
