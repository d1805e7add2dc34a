#include <swarm/assignment.hpp>

#include <algorithm>
#include <string>

#include <swarm/errors.hpp>
#include <swarm/priority.hpp>

namespace swarm {

namespace {

// Kuhn's augmenting-path matching over feasible cells only. Used as an
// explicit feasibility gate so the infeasible sentinel can never be selected
// silently by the cost optimization below.
bool has_perfect_row_matching(const cost_matrix& cm) {
    const std::size_t n = cm.rows();
    const int m = cm.goal_count;
    std::vector<int> col_to_row(static_cast<std::size_t>(m), -1);

    for (std::size_t row = 0; row < n; ++row) {
        std::vector<char> visited(static_cast<std::size_t>(m), 0);
        // Iterative DFS stack of (row, next column to try).
        struct frame {
            std::size_t row;
            int col;
        };
        const auto try_augment = [&](std::size_t start_row) -> bool {
            std::vector<frame> stack{{start_row, 0}};
            std::vector<int> taken_col(n, -1);
            while (!stack.empty()) {
                auto& top = stack.back();
                bool advanced = false;
                for (int g = top.col; g < m; ++g) {
                    top.col = g + 1;
                    if (visited[static_cast<std::size_t>(g)] || cm.is_infeasible(top.row, g + 1)) {
                        continue;
                    }
                    visited[static_cast<std::size_t>(g)] = 1;
                    taken_col[top.row] = g;
                    if (col_to_row[static_cast<std::size_t>(g)] < 0) {
                        // Free column: commit the whole alternating path.
                        for (const auto& f : stack) {
                            col_to_row[static_cast<std::size_t>(taken_col[f.row])] = static_cast<int>(f.row);
                        }
                        return true;
                    }
                    stack.push_back({static_cast<std::size_t>(col_to_row[static_cast<std::size_t>(g)]), 0});
                    advanced = true;
                    break;
                }
                if (!advanced) {
                    stack.pop_back();
                }
            }
            return false;
        };
        if (!try_augment(row)) {
            return false;
        }
    }
    return true;
}

// Jonker-Volgenant shortest augmenting path assignment on a rectangular
// matrix (rows <= columns). Infeasible cells carry +inf and are unreachable
// given the feasibility gate above. Returns the matched column per row.
std::vector<int> min_cost_row_matching(const cost_matrix& cm) {
    const int n = static_cast<int>(cm.rows());
    const int m = cm.goal_count;
    const double inf = std::numeric_limits<double>::infinity();

    // 1-based potentials/matching per the classic formulation.
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(m) + 1, 0.0);
    std::vector<int> match(static_cast<std::size_t>(m) + 1, 0);  // column -> row
    std::vector<int> way(static_cast<std::size_t>(m) + 1, 0);

    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(m) + 1, inf);
        std::vector<char> used(static_cast<std::size_t>(m) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = match[static_cast<std::size_t>(j0)];
            double delta = inf;
            int j1 = -1;
            for (int j = 1; j <= m; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    continue;
                }
                const double cur = cm.at(static_cast<std::size_t>(i0 - 1), j) - u[static_cast<std::size_t>(i0)] -
                                   v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            if (!(delta < inf)) {
                throw infeasible_assignment{"assignment: no augmenting path over feasible cells"};
            }
            for (int j = 0; j <= m; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= m; ++j) {
        if (match[static_cast<std::size_t>(j)] != 0) {
            row_to_col[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)] = j;
        }
    }
    return row_to_col;
}

}  // namespace

int assignment_matrix::assigned_goal(std::size_t row) const {
    for (int g = 1; g <= goal_count; ++g) {
        if (at(row, g) != 0) {
            return g;
        }
    }
    return k_no_goal;
}

int assignment_matrix::assigned_goal_for(int agent_id) const {
    for (std::size_t row = 0; row < agent_ids.size(); ++row) {
        if (agent_ids[row] == agent_id) {
            return assigned_goal(row);
        }
    }
    return k_no_goal;
}

double assignment_matrix::total_cost(const cost_matrix& costs) const {
    double total = 0.0;
    for (std::size_t row = 0; row < agent_ids.size(); ++row) {
        total += costs.at(row, assigned_goal(row));
    }
    return total;
}

cost_matrix build_cost_matrix(const agent_view& view, std::span<const goal_motion> goals, double now) {
    cost_matrix cm;
    cm.goal_count = static_cast<int>(goals.size());
    cm.agent_ids.reserve(view.neighbors.size());
    for (const auto& member : view.neighbors) {
        cm.agent_ids.push_back(member.id);
    }
    cm.costs.assign(cm.rows() * static_cast<std::size_t>(cm.goal_count), 0.0);

    for (std::size_t row = 0; row < cm.rows(); ++row) {
        const auto& member = view.neighbors[row];
        for (const auto& goal : goals) {
            const std::size_t idx = row * static_cast<std::size_t>(cm.goal_count) + static_cast<std::size_t>(goal.goal_index - 1);
            if (member.banned_goals.count(goal.goal_index) != 0) {
                cm.costs[idx] = k_infeasible_cost;
                continue;
            }
            const kinematic_state target = goal_state(goal, member.deadline);
            const poly_trajectory traj =
                solve_unconstrained_bvp(member.state, now, {target.position, target.velocity}, member.deadline);
            cm.costs[idx] = energy_to_go(traj, now);
        }
    }
    return cm;
}

assignment_matrix solve_local_assignment(const cost_matrix& costs) {
    if (costs.rows() == 0 || costs.goal_count == 0) {
        throw infeasible_assignment{"assignment: empty problem"};
    }
    if (costs.rows() > static_cast<std::size_t>(costs.goal_count)) {
        throw infeasible_assignment{"assignment: more agents than goals in neighborhood"};
    }
    if (!has_perfect_row_matching(costs)) {
        throw infeasible_assignment{"assignment: banned goals leave some agent without a feasible goal"};
    }

    const std::vector<int> row_to_col = min_cost_row_matching(costs);

    assignment_matrix am;
    am.agent_ids = costs.agent_ids;
    am.goal_count = costs.goal_count;
    am.cells.assign(costs.rows() * static_cast<std::size_t>(costs.goal_count), 0);
    for (std::size_t row = 0; row < costs.rows(); ++row) {
        const int goal = row_to_col[row];
        if (goal <= 0 || costs.is_infeasible(row, goal)) {
            throw infeasible_assignment{"assignment: optimizer failed to place agent " +
                                        std::to_string(costs.agent_ids[row]) + " on a feasible goal"};
        }
        am.cells[row * static_cast<std::size_t>(costs.goal_count) + static_cast<std::size_t>(goal - 1)] = 1;
    }
    return am;
}

std::vector<conflict_set> detect_conflicts(std::span<const prescribed_goal> prescribed) {
    std::map<int, std::vector<int>> by_goal;
    for (const auto& p : prescribed) {
        if (p.goal_index != k_no_goal) {
            by_goal[p.goal_index].push_back(p.agent_id);
        }
    }
    std::vector<conflict_set> sets;
    sets.reserve(by_goal.size());
    for (auto& [goal, members] : by_goal) {
        std::sort(members.begin(), members.end());
        sets.push_back({members.front(), goal, std::move(members)});
    }
    return sets;
}

namespace {

// Mutable per-agent bookkeeping while the banning rounds run.
struct round_state {
    agent_state state;
    double deadline{0.0};
    std::set<int> banned;
    int prescribed{k_no_goal};
    std::size_t neighborhood_size{0};
};

double energy_toward(const round_state& rs, std::span<const goal_motion> goals, double now) {
    if (rs.prescribed == k_no_goal || !(rs.deadline - now > k_degenerate_horizon_epsilon)) {
        return 0.0;
    }
    const kinematic_state target = goal_state(goals[static_cast<std::size_t>(rs.prescribed - 1)], rs.deadline);
    const poly_trajectory traj =
        solve_unconstrained_bvp(rs.state, now, {target.position, target.velocity}, rs.deadline);
    return energy_to_go(traj, now);
}

}  // namespace

resolve_result resolve_round(std::span<const agent_view> views,
                             std::span<const goal_motion> goals,
                             double now,
                             double extension,
                             const std::set<int>& dirty_agents) {
    std::map<int, round_state> table;
    std::map<int, std::vector<int>> members;
    for (const auto& view : views) {
        round_state rs;
        rs.state = view.state;
        rs.deadline = view.deadline;
        rs.banned = view.banned_goals;
        rs.prescribed = view.prescribed_goal;
        rs.neighborhood_size = view.neighbors.size();
        table[view.id] = std::move(rs);
        std::vector<int> ids;
        ids.reserve(view.neighbors.size());
        for (const auto& n : view.neighbors) {
            ids.push_back(n.id);
        }
        members[view.id] = std::move(ids);
    }

    resolve_result result;
    std::set<int> resolvers = dirty_agents;
    // The whole protocol runs at one instant: the energies feeding the
    // priority comparisons are frozen once, right after the opening solve
    // pass (so every agent measures toward an actual prescription); with
    // per-round refreshes the order churns and displacement chains grow.
    std::map<int, double> frozen_energy;

    // Displacement chains can make the loop run past N - 1 banning rounds
    // (each contested goal alone is settled within N - 1 bans); the guard
    // below only catches runaway iteration.
    const int max_rounds = std::max<int>(1, static_cast<int>(views.size() * (goals.size() + 1)));

    for (int round = 1;; ++round) {
        if (round > max_rounds + 1) {
            throw non_termination{"banning loop exceeded " + std::to_string(max_rounds) + " rounds"};
        }

        // Re-solve the local problem of every agent whose inputs changed,
        // against the freshest broadcast prescriptions/bans/deadlines.
        for (const int id : resolvers) {
            agent_view local;
            local.id = id;
            local.now = now;
            local.state = table[id].state;
            local.deadline = table[id].deadline;
            local.banned_goals = table[id].banned;
            for (const int member_id : members[id]) {
                const round_state& rs = table[member_id];
                neighbor_snapshot snap;
                snap.id = member_id;
                snap.state = rs.state;
                snap.deadline = rs.deadline;
                snap.neighborhood_size = rs.neighborhood_size;
                snap.prescribed_goal = rs.prescribed;
                snap.banned_goals = rs.banned;
                local.neighbors.push_back(std::move(snap));
            }
            const cost_matrix cm = build_cost_matrix(local, goals, now);
            const assignment_matrix am = solve_local_assignment(cm);
            table[id].prescribed = am.assigned_goal_for(id);
            ++result.report.local_solves;
        }

        if (round == 1) {
            for (const auto& [id, rs] : table) {
                frozen_energy[id] = energy_toward(rs, goals, now);
            }
        }

        // Each agent inspects its own conflict set and bans itself from the
        // contested goal when it is not the set's priority winner.
        std::vector<ban_event> new_bans;
        for (const auto& [id, rs] : table) {
            if (rs.prescribed == k_no_goal) {
                continue;
            }
            std::vector<prescribed_goal> local_claims;
            for (const int member_id : members[id]) {
                local_claims.push_back({member_id, table[member_id].prescribed, table[member_id].deadline});
            }
            const std::vector<conflict_set> sets = detect_conflicts(local_claims);
            const conflict_set* own = nullptr;
            for (const auto& cs : sets) {
                if (cs.goal_index == rs.prescribed &&
                    std::binary_search(cs.members.begin(), cs.members.end(), id)) {
                    own = &cs;
                    break;
                }
            }
            if (own == nullptr || own->members.size() < 2) {
                continue;
            }
            std::vector<agent_summary> summaries;
            summaries.reserve(own->members.size());
            for (const int member_id : own->members) {
                summaries.push_back({member_id, table[member_id].neighborhood_size, frozen_energy[member_id]});
            }
            const int winner = priority_winner(summaries);
            if (winner != id) {
                new_bans.push_back({id, rs.prescribed, round, winner});
            }
        }

        if (new_bans.empty()) {
            result.report.rounds = std::max(1, round - 1);
            break;
        }
        if (round > max_rounds) {
            throw non_termination{"banning loop exceeded " + std::to_string(max_rounds) + " rounds"};
        }
        result.report.rounds = round;

        resolvers.clear();
        for (const auto& ban : new_bans) {
            round_state& rs = table.at(ban.agent_id);
            rs.banned.insert(ban.goal_index);
            rs.prescribed = k_no_goal;
            rs.deadline = now + extension;
            resolvers.insert(ban.agent_id);
            result.report.bans.push_back(ban);
        }
    }

    for (const auto& [id, rs] : table) {
        result.prescriptions[id] = rs.prescribed;
        result.deadlines[id] = rs.deadline;
        result.banned_goals[id] = rs.banned;
    }
    return result;
}

}  // namespace swarm
