#pragma once

#include <cstddef>
#include <span>

namespace swarm {

// Locally observable quantities from which any two agents can be ordered:
// neighborhood size, remaining energy toward the current goal, and the
// (arbitrary but unique) agent index.
struct agent_summary {
    int agent_id{0};               // unique, positive
    std::size_t neighborhood_size{0};
    double energy_to_go{0.0};      // J/kg, >= 0
};

// True when agent i outranks agent j. Built from the three pairwise
// indicators combined into the composite indicator: a larger neighborhood
// wins outright; on a neighborhood tie the larger energy-to-go wins; on a
// full tie the larger index wins. Energies are compared exactly — the index
// tiebreak already makes the order total, so no epsilon band is needed.
//
// Throws identity_comparison when both ids are equal.
bool has_priority(const agent_summary& i, const agent_summary& j);

// The unique member that outranks every other candidate. Requires a
// non-empty set of distinct ids; totality of the order guarantees existence.
int priority_winner(std::span<const agent_summary> candidates);

}  // namespace swarm
