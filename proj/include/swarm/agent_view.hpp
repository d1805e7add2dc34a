#pragma once

#include <set>
#include <vector>

#include <swarm/core.hpp>

namespace swarm {

// Sentinel for "no goal prescribed yet"; goal indices are 1-based.
inline constexpr int k_no_goal = 0;

// What one agent knows about a neighborhood member (itself included) at a
// snapshot instant. Everything here is either directly sensed or broadcast
// by the member itself.
struct neighbor_snapshot {
    int id{0};
    agent_state state;
    double deadline{0.0};  // the member's current arrival time t_f
    std::size_t neighborhood_size{0};
    double energy_to_go{0.0};  // toward the member's current prescribed goal
    int prescribed_goal{k_no_goal};
    std::set<int> banned_goals;
};

// One agent's partial observation of the world: its own bookkeeping plus a
// snapshot of every agent within sensing range (self included, sorted by id).
struct agent_view {
    int id{0};
    double now{0.0};
    agent_state state;
    double deadline{0.0};
    int prescribed_goal{k_no_goal};
    std::set<int> banned_goals;
    std::vector<neighbor_snapshot> neighbors;

    const neighbor_snapshot* find(int agent_id) const {
        for (const auto& n : neighbors) {
            if (n.id == agent_id) {
                return &n;
            }
        }
        return nullptr;
    }
};

}  // namespace swarm
