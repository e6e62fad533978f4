#pragma once

#include <filesystem>
#include <string>

#include "dpp/protocol.hpp"

namespace dpp {

/// A fully validated scenario file: system, protocol and noise settings.
/// Drift is written in ppm for readability and converted to dimensionless
/// epsilon on load.
struct Scenario {
  int dimensionality{2};
  System system;
  ProtocolConfig protocol{};
  int p_select{0};  ///< pulse choice for mu extraction; 0 averages both
  int q_select{0};  ///< path choice for ToA extraction; 0 averages both
};

/// Parses scenario JSON. Unknown fields are rejected; errors carry the
/// offending field path. `max_drift_ppm` caps per-node |drift|.
Scenario parse_scenario(const std::string& json_text,
                        const std::string& origin = "<string>",
                        double max_drift_ppm = 20.0);

Scenario load_scenario(const std::filesystem::path& path,
                       double max_drift_ppm = 20.0);

}  // namespace dpp
