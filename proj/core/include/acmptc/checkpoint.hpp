#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "acmptc/drl.hpp"

namespace acmptc {

/// Trained agents together with the configuration they were trained under.
struct Checkpoint {
  AgentConfig agent_config;
  std::vector<Agent> agents;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// JSON checkpoint. Doubles are written in shortest round-trip form, so
/// save -> load -> save is byte-identical.
std::string serialize_checkpoint(const Checkpoint& checkpoint);

/// Throws ParseError for malformed text and ShapeError for inconsistent layers
/// (including hidden widths that disagree with agent_config).
Checkpoint parse_checkpoint(std::string_view text);

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace acmptc
