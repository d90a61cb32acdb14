#pragma once

// Flat `key = value` config files. One registry drives parsing, defaults and
// the --help listing, so documented and accepted keys cannot drift apart.

#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "grouptrack/harness.hpp"

namespace grouptrack::config {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigKey {
  std::string name;
  std::string description;
  std::function<void(harness::SweepSpec&, std::string_view)> set;
  std::function<std::string(const harness::SweepSpec&)> get;
};

/// Every accepted key, in documentation order.
const std::vector<ConfigKey>& config_keys();

/// Base spec with all defaults (scenario noise comes from the presets).
harness::SweepSpec default_spec();

/// Applies `key = value` lines; `#` starts a comment. Unknown keys, repeated
/// keys and malformed values throw ConfigError naming source, line and key.
void apply_config_text(harness::SweepSpec& spec, std::string_view text,
                       std::string_view source = "<config>");

void apply_config_file(harness::SweepSpec& spec, const std::filesystem::path& path);

/// `  key  (default: value)  description`, one line per key.
std::string describe_keys(const harness::SweepSpec& defaults);

}  // namespace grouptrack::config
