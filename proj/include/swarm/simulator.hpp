#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <swarm/assignment.hpp>
#include <swarm/core.hpp>
#include <swarm/goals.hpp>
#include <swarm/trajectory.hpp>

namespace swarm {

struct agent_initial {
    int id{0};
    agent_state state;

    bool operator==(const agent_initial&) const = default;
};

// Full description of one deterministic run. The defaults mirror the
// reference experiment shape: formation-following goals, T = 10 s deadline
// extension, 0.01 s ticks.
struct scenario_config {
    int agent_count{0};
    int goal_count{0};
    double agent_radius{0.25};   // R, m
    double sensing_horizon{std::numeric_limits<double>::infinity()};  // h, m
    double deadline_extension{10.0};  // T, s
    double initial_deadline{10.0};    // first t_f, s (absolute)
    double dt{0.01};
    double min_time{20.0};
    double max_time{60.0};
    double formation_lookahead{0.1};  // hold-mode replanning horizon, s
    std::uint64_t seed{0};
    bounds motion_bounds;
    std::vector<agent_initial> agents;
    std::vector<goal_motion> goals;

    bool operator==(const scenario_config&) const = default;
};

// Throws validation_error naming the violated invariant. Checks counts,
// uniqueness, N <= M, h >= 4R, dt > 0, goal spacing > 2R over [0, max_time]
// and initial pairwise agent separation >= 2R.
void validate_scenario(const scenario_config& config);

struct event {
    enum class kind {
        assignment,       // one banning protocol invocation (rounds, solves)
        ban,              // agent banned from goal in a given round
        replan,           // agent received a fresh trajectory
        junction_solve,   // one contact-arc insertion
        bound_violation,  // velocity/control norm outside configured bounds
        arrival,          // agent reached its prescribed goal at its deadline
        halt,             // run stopped before completion
        invariant_breach  // internal guarantee failed (reported, not thrown)
    };

    kind type{kind::assignment};
    double time{0.0};
    int agent{0};
    int goal{0};
    int round{0};
    int other{0};     // winner id / leader id / alternatives, by kind
    double value{0.0};  // violation magnitude, junction energy, ...
    std::string note;
};

// Table-style aggregates of one run.
struct metrics {
    double min_separation{std::numeric_limits<double>::infinity()};
    double total_energy{0.0};      // transit only, J/kg
    double formation_energy{0.0};  // post-arrival hold, J/kg
    double t_f{0.0};               // last arrival, s
    int total_bans{0};
    int assignment_rounds{0};
    int replans{0};
    int ticks{0};
    bool completed{false};
    bool theorem_bound_ok{true};
};

struct trajectory_sample {
    double t{0.0};
    int agent_id{0};
    vec2 position;
    vec2 velocity;
    vec2 control;
    int goal{k_no_goal};
};

struct run_artifacts {
    metrics totals;
    std::vector<trajectory_sample> trajectory_log;
    std::vector<event> events;
};

// Deterministic time-stepped world. Each tick: sense, re-run the banning
// protocol where neighborhoods changed, replan in priority order, advance
// states by exact evaluation of the planned laws, account energy, update
// metrics. Identical configs produce identical artifacts bit for bit.
class simulator {
  public:
    explicit simulator(scenario_config config);

    // Snapshot of everything agent_id can observe (members within h,
    // inclusive, self included).
    agent_view sense_neighborhood(int agent_id) const;

    void tick();

    // Ticks until all agents have arrived and min_time has elapsed, or
    // max_time is hit. Returns the collected artifacts. One-shot: construct
    // a fresh simulator per run.
    run_artifacts run();

    double time() const { return time_; }
    const metrics& totals() const { return metrics_; }
    const scenario_config& config() const { return config_; }

  private:
    struct agent_runtime {
        int id{0};
        agent_state state;
        int prescribed_goal{k_no_goal};
        double deadline{0.0};
        std::set<int> banned_goals;
        std::shared_ptr<const piecewise_trajectory> published;  // plan + goal-track tail
        bool arrived{false};
        double arrival_time{0.0};
        double transit_energy{0.0};
        double hold_energy{0.0};
        std::vector<int> last_members;
        bool replan_needed{false};
        // Law flown during the current tick: published up to switch_time,
        // then the per-tick hold cubic.
        double switch_time{0.0};
        std::optional<poly_trajectory> hold;
    };

    double effective_deadline(const agent_runtime& agent) const;
    double energy_toward_goal(const agent_runtime& agent) const;
    std::vector<int> members_of(int agent_id) const;
    agent_view build_view(int agent_id, const std::vector<std::size_t>& sizes) const;
    kinematic_state eval_tick_law(const agent_runtime& agent, double t) const;
    void publish(agent_runtime& agent, piecewise_trajectory plan);
    void publish_hold_track(agent_runtime& agent);
    void log_states(double t);
    agent_runtime& agent_ref(int id);

    scenario_config config_;
    double time_{0.0};
    std::vector<agent_runtime> agents_;  // sorted by id
    metrics metrics_;
    std::vector<event> events_;
    std::vector<trajectory_sample> trajectory_log_;
    bool halted_{false};
};

// Convenience wrapper: validate, simulate, collect.
run_artifacts run_scenario(const scenario_config& config);

}  // namespace swarm
