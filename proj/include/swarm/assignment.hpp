#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <vector>

#include <swarm/agent_view.hpp>
#include <swarm/goals.hpp>

namespace swarm {

// Sentinel marking banned (agent, goal) cells; never selectable.
inline constexpr double k_infeasible_cost = std::numeric_limits<double>::infinity();

// Energy cost of moving each neighborhood member to each goal. Rows follow
// the neighborhood's id order; columns are goal indices 1..goal_count.
struct cost_matrix {
    std::vector<int> agent_ids;
    int goal_count{0};
    std::vector<double> costs;  // row-major, agent_ids.size() x goal_count

    double at(std::size_t row, int goal_index) const { return costs[row * goal_count + (goal_index - 1)]; }
    bool is_infeasible(std::size_t row, int goal_index) const { return at(row, goal_index) == k_infeasible_cost; }
    std::size_t rows() const { return agent_ids.size(); }
};

// Binary agent-by-goal matrix: each row sums to exactly one, each column to
// at most one, and no cell sits on an infeasible entry of its cost matrix.
struct assignment_matrix {
    std::vector<int> agent_ids;
    int goal_count{0};
    std::vector<std::uint8_t> cells;  // row-major binary

    std::uint8_t at(std::size_t row, int goal_index) const { return cells[row * goal_count + (goal_index - 1)]; }
    // The single goal index selected in the given row.
    int assigned_goal(std::size_t row) const;
    // The goal selected for the given agent id; k_no_goal if the id is absent.
    int assigned_goal_for(int agent_id) const;
    double total_cost(const cost_matrix& costs) const;
};

// An agent's committed goal and the deadline by which it must arrive.
struct prescribed_goal {
    int agent_id{0};
    int goal_index{k_no_goal};
    double deadline{0.0};
};

// Agents within one neighborhood that share a prescribed goal. Singleton
// sets mean "no conflict" for their member.
struct conflict_set {
    int anchor{0};  // smallest member id
    int goal_index{k_no_goal};
    std::vector<int> members;  // sorted, includes anchor
};

// Builds the cost matrix for one agent's local assignment problem: rows are
// the neighborhood members, and cost[r][g] is the unconstrained minimum
// energy to move member r from its state at `now` to goal g's state at
// member r's deadline. Banned pairs are marked infeasible.
//
// Throws degenerate_horizon (from the boundary solver) when any member's
// deadline is not beyond `now`.
cost_matrix build_cost_matrix(const agent_view& view, std::span<const goal_motion> goals, double now);

// Minimum-total-cost row-perfect matching of agents to goals. Deterministic:
// rows are processed in id order and cost ties resolve toward the lower goal
// index (then lower agent id) through the fixed ascending scan order.
//
// Throws infeasible_assignment when no perfect matching over feasible cells
// exists (the available-goal assumption is violated).
assignment_matrix solve_local_assignment(const cost_matrix& costs);

// Groups prescriptions within a neighborhood by goal: one conflict_set per
// claimed goal. Unassigned members (k_no_goal) are ignored.
std::vector<conflict_set> detect_conflicts(std::span<const prescribed_goal> prescribed);

struct ban_event {
    int agent_id{0};
    int goal_index{0};
    int round{0};
    int winner_id{0};  // who kept the contested goal
};

struct round_report {
    int rounds{0};
    std::vector<ban_event> bans;
    int local_solves{0};
};

// Post-round per-agent bookkeeping.
struct resolve_result {
    std::map<int, int> prescriptions;
    std::map<int, double> deadlines;
    std::map<int, std::set<int>> banned_goals;
    round_report report;
};

// Runs the decentralized banning protocol on a consistent world snapshot
// until every neighborhood's conflict sets are singletons. `dirty_agents`
// are the agents that must re-solve their local assignment in the first
// round (new arrivals to the protocol, changed neighborhoods, fresh bans);
// afterwards exactly the agents whose ban set grew re-solve. Every round,
// each non-winner of its own conflict set permanently bans the contested
// goal and moves its deadline to now + extension. The loop is bounded by
// N - 1 rounds; exceeding the bound throws non_termination.
//
// Views must cover all agents and agree on symmetric membership. Results
// are independent of per-round evaluation order.
resolve_result resolve_round(std::span<const agent_view> views,
                             std::span<const goal_motion> goals,
                             double now,
                             double extension,
                             const std::set<int>& dirty_agents);

}  // namespace swarm
