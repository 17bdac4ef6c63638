#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "fmdp/mission_model.hpp"

namespace fmdp {

/// Shipped presets: "mission3", "mission1", "dutycycle".
std::vector<std::string> preset_names();
/// Throws ValidationError for an unknown name.
ModelConfig preset_config(const std::string& name);

/// Single-goal, fault-free configuration used by the scripted duty-cycle rollout:
/// goal at cell 5, base at cell 1.
ModelConfig duty_cycle_config();

nlohmann::json config_to_json(const ModelConfig& cfg);
/// Absent fields take the defaults of default_config(goal_count). Every type
/// or value problem is reported with its document path in one ValidationError.
ModelConfig config_from_json(const nlohmann::json& doc);

/// Preset name or path to a JSON document.
ModelConfig load_config(const std::string& name_or_path);

/// Hash of the canonical JSON serialization.
std::uint64_t config_hash(const ModelConfig& cfg);

}  // namespace fmdp
