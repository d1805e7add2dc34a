#pragma once

#include <swarm/core.hpp>

namespace swarm {

// Motion law of one goal slot: a base point carried along by the formation
// velocity, optionally overlaid with a sinusoidal velocity term. The periodic
// term integrates to (amplitude/frequency) sin(frequency t) in position so the
// law stays exact under differentiation.
struct goal_motion {
    int goal_index{0};  // 1-based
    vec2 base_offset;
    vec2 formation_velocity;
    vec2 periodic_amplitude;      // velocity amplitude, m/s
    double periodic_frequency{0.0};  // rad/s; amplitude must be zero when zero

    constexpr bool operator==(const goal_motion&) const = default;
};

// Exact goal state at time t (position and velocity consistent by construction).
kinematic_state goal_state(const goal_motion& motion, double t);

}  // namespace swarm
