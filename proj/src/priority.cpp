#include <swarm/priority.hpp>

#include <string>

#include <swarm/errors.hpp>

namespace swarm {

namespace {

int indicator_neighborhood(const agent_summary& i, const agent_summary& j) {
    return i.neighborhood_size > j.neighborhood_size ? 1 : 0;
}

int indicator_energy(const agent_summary& i, const agent_summary& j) {
    return i.energy_to_go > j.energy_to_go ? 1 : 0;
}

int indicator_index(const agent_summary& i, const agent_summary& j) {
    return i.agent_id > j.agent_id ? 1 : 0;
}

}  // namespace

bool has_priority(const agent_summary& i, const agent_summary& j) {
    if (i.agent_id == j.agent_id) {
        throw identity_comparison{"has_priority: both summaries carry id " + std::to_string(i.agent_id)};
    }
    // Composite indicator: the (1 - x)(1 - y) products gate each tiebreak to
    // the exact-tie case of the previous level.
    const int n_ij = indicator_neighborhood(i, j);
    const int n_ji = indicator_neighborhood(j, i);
    const int e_ij = indicator_energy(i, j);
    const int e_ji = indicator_energy(j, i);
    const int a_ij = indicator_index(i, j);

    const int composite = n_ij + (1 - n_ij) * (1 - n_ji) * (e_ij + (1 - e_ij) * (1 - e_ji) * a_ij);
    return composite == 1;
}

int priority_winner(std::span<const agent_summary> candidates) {
    if (candidates.empty()) {
        throw error{"priority_winner: empty candidate set"};
    }
    const agent_summary* best = &candidates[0];
    for (std::size_t k = 1; k < candidates.size(); ++k) {
        if (has_priority(candidates[k], *best)) {
            best = &candidates[k];
        }
    }
    return best->agent_id;
}

}  // namespace swarm
