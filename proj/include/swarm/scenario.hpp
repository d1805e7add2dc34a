#pragma once

#include <iosfwd>
#include <string>

#include <swarm/simulator.hpp>

namespace swarm {

// Scenario file format: flat structured text with three sections.
//
//   [scenario]        key = value pairs (any order, defaults applied)
//   [agents]          one line per agent:  id x y vx vy
//   [goals]           one line per goal:   index base_x base_y form_vx form_vy amp_x amp_y freq
//
// Numbers use '.' decimal separators; "inf" is accepted where a horizon or
// bound is unbounded. '#' starts a comment. Recognized [scenario] keys:
// agents, goals, radius, horizon, extension, initial_deadline, dt, seed,
// min_time, max_time, formation_lookahead, v_min, v_max, u_min, u_max.
//
// Throws parse_error (with line context) or validation_error.
scenario_config parse_scenario(std::istream& in);
scenario_config load_scenario(const std::string& path);

// Canonical serialization; parse_scenario(save_scenario(c)) == c.
std::string save_scenario(const scenario_config& config);

}  // namespace swarm
