#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "acmptc/sim_engine.hpp"

namespace acmptc {

/// Parses a JSON scenario document with sections dynamics, streams, control,
/// agent and run. Missing keys keep their defaults; unknown keys, wrong types
/// and invalid values throw ConfigError naming the key.
ScenarioConfig parse_config(std::string_view text);

/// Throws IoError when the file cannot be read.
ScenarioConfig load_config_file(const std::string& path);

/// Full document with every key written out; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ScenarioConfig& cfg);

struct ConfigEntry {
  std::string key;
  std::string value;
  /// "config" when the document set it, otherwise "default".
  std::string source;
  /// Where a default comes from: "reference setup" or "engine choice".
  std::string origin;
};

/// Every leaf key of the resolved config, in document order.
std::vector<ConfigEntry> explain_config(std::string_view text);

std::string format_explanation(const std::vector<ConfigEntry>& entries);

}  // namespace acmptc
