#pragma once

#include <stdexcept>
#include <string>

namespace swarm {

// Base class for all library errors so callers can catch the whole family.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Boundary-value horizon below the solvable epsilon (the 4x4 system is singular).
struct degenerate_horizon : error {
    using error::error;
};

// Query time outside a trajectory's [t0, tf] domain.
struct out_of_domain : error {
    using error::error;
};

// Priority comparison between an agent and itself.
struct identity_comparison : error {
    using error::error;
};

// No perfect row-matching exists on the feasible (non-banned) cells.
struct infeasible_assignment : error {
    using error::error;
};

// The banning loop exceeded its round bound; indicates an invariant bug.
struct non_termination : error {
    using error::error;
};

// Contact basis requested at zero relative speed (q_hat undefined).
struct zero_relative_speed : error {
    using error::error;
};

// Junction search failed to produce a safe piecewise trajectory.
struct no_feasible_trajectory : error {
    using error::error;
};

// Multi-contact geometry impossible: leaders separated beyond 4R.
struct contact_broken : error {
    using error::error;
};

// Jump-condition multiplier denominator s.v vanishes at the entry junction.
struct singular_nu : error {
    using error::error;
};

// Scenario file could not be parsed; carries line and field context in the message.
struct parse_error : error {
    using error::error;
};

// Scenario parsed but violates a config invariant; names the invariant.
struct validation_error : error {
    using error::error;
};

}  // namespace swarm
