#pragma once

// Command-line front end: simulate, generate-tracks, validate-oracles.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "grouptrack/harness.hpp"
#include "grouptrack/oracle.hpp"

namespace grouptrack::cli {

enum class Subcommand { kSimulate, kGenerateTracks, kValidateOracles, kHelp };

/// Bad flags, bad values, unusable paths or config errors.
class CliError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CliInvocation {
  Subcommand subcommand = Subcommand::kHelp;
  std::string help_text;  // set for kHelp
  harness::SweepSpec spec;
  std::filesystem::path out;
  std::optional<std::filesystem::path> config_path;
  bool emit_svg = false;
  bool run_logs = true;
  oracle::OracleOptions oracle;
};

/// "start:stop:step" (stop inclusive when reached), a single value, or a
/// comma list. Throws CliError on malformed or non-positive entries.
std::vector<std::int64_t> parse_intervals(std::string_view text);

/// Parses argv, applies defaults and the config file, and checks every path
/// without creating anything. Throws CliError.
CliInvocation parse_and_validate(int argc, const char* const* argv);

/// Full help: flags with defaults plus every config key.
std::string help_text();

/// Executes a validated invocation. Returns the process exit code.
int execute(const CliInvocation& invocation, std::ostream& out, std::ostream& err);

/// parse_and_validate + execute with diagnostics on err.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace grouptrack::cli
