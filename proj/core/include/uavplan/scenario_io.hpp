#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "uavplan/model.hpp"

namespace uavplan {

// Scenario text format:
//
//   # comment
//   area_m = 500
//   p_tx = 0.1
//   ...                      (scalar keys, any order)
//   [clusters]
//   0,120.5,33.2,4           (id,x_m,y_m,members)
//   [uavs]
//   0,450.0                  (id,altitude_m)
//
// Required keys: area_m, carrier_hz, rb_bandwidth_hz, noise_psd_w_per_hz,
// pathloss_exponent, ber_target, packet_bits, p_tx, pmax_w, total_rbs.
// slot_seconds is optional and defaults to 1.

/// Parses scenario text. Throws ParseError naming the offending line.
ClusterScenario load_scenario(std::string_view text);

/// Serializes with round-trip precision; load_scenario(save_scenario(s)) == s.
std::string save_scenario(const ClusterScenario& scenario);

/// Throws ParameterError if the file cannot be opened, ParseError on bad content.
ClusterScenario read_scenario_file(const std::filesystem::path& path);
void write_scenario_file(const std::filesystem::path& path, const ClusterScenario& scenario);

}  // namespace uavplan
