#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace burstnet::cli {

// Default parent directory for relative --out paths.
inline constexpr const char* kRunRootEnv = "BURSTNET_RUN_ROOT";

// Subcommands gen-data, train, eval, snr-sweep, transfer. Returns the process
// exit code: 0 when every output was written, 1 on runtime errors, 2 on usage
// errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Relative paths resolve against $BURSTNET_RUN_ROOT when it is set.
std::filesystem::path resolve_out(const std::filesystem::path& path);

}  // namespace burstnet::cli
