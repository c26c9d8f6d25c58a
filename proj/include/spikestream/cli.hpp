#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "spikestream/config.hpp"

namespace spikestream::cli {

enum ExitCode : int { kSuccess = 0, kRuntimeError = 1, kUsageError = 2 };

// Parses argv (argv[0] is the program name) and runs one subcommand.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

struct ManifestEntry {
  std::filesystem::path path;
  int label = 0;
};

// "path label" per line; '#' starts a comment. Relative paths resolve against the
// manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest);

// "spikestream <version> config <hash>"
std::string provenance(const config::RunConfig& config);

}  // namespace spikestream::cli
