#pragma once

#include <stdexcept>
#include <string>

#include "wlanfair/scenario.hpp"

namespace wlanfair {

// Parse / schema / validation problems with the scenario file. The message
// names the offending key or station where possible.
struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Scenario file schema: {"phy": {...}?, "stations": [{...}, ...]}. Unknown
// keys anywhere are rejected, except keys starting with '_' which pass as
// annotations. Station keys: id, lambda_pkt_s, rate_bps, payload_bytes,
// cw_min?, p_err?. Phy keys mirror PhyMacParams fields.
NetworkScenario parse_scenario(const std::string& json_text, const std::string& name);
NetworkScenario load_scenario(const std::string& path);

std::string scenario_to_json(const NetworkScenario& sc);
void write_scenario(const NetworkScenario& sc, const std::string& path);

} // namespace wlanfair
