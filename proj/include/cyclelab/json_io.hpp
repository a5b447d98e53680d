#pragma once

#include <json.hpp>

#include "cyclelab/central_map.hpp"
#include "cyclelab/cycle_spec.hpp"

namespace cyclelab {

nlohmann::json central_map_to_json(const CentralMap& m);
CentralMap central_map_from_json(const nlohmann::json& j);

nlohmann::json spec_to_json(const CycleSpec& s);
CycleSpec spec_from_json_value(const nlohmann::json& j);

}  // namespace cyclelab
