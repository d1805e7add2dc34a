#include <swarm/simulator.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <string>

#include <swarm/errors.hpp>
#include <swarm/priority.hpp>

namespace swarm {

namespace {

// Upcoming-violation window for replan triggering; real encounters close
// over many ticks, so a short horizon is enough to react in time.
constexpr double k_replan_window = 2.0;
// Detection threshold sits a hair below exact contact so that arcs riding
// the constraint boundary do not self-trigger.
constexpr double k_detect_release = -1e-9;
constexpr double k_tail_duration = 1e6;
constexpr std::size_t k_max_bound_events = 200;

bool bounds_active(const bounds& b) {
    return b.v_min > 0.0 || b.u_min > 0.0 || std::isfinite(b.v_max) || std::isfinite(b.u_max);
}

}  // namespace

void validate_scenario(const scenario_config& config) {
    const auto fail = [](const std::string& what) { throw validation_error{what}; };

    if (config.agent_count <= 0) {
        fail("agent count must be positive");
    }
    if (config.goal_count <= 0) {
        fail("goal count must be positive");
    }
    if (config.agent_count > config.goal_count) {
        fail("N exceeds M");
    }
    if (!(config.agent_radius > 0.0)) {
        fail("agent radius must be positive");
    }
    if (!(config.sensing_horizon >= 4.0 * config.agent_radius)) {
        fail("sensing horizon must be at least 4R");
    }
    if (!(config.dt > 0.0)) {
        fail("dt must be positive");
    }
    if (!(config.deadline_extension > 0.0)) {
        fail("deadline extension T must be positive");
    }
    if (!(config.initial_deadline > 0.0)) {
        fail("initial deadline must be positive");
    }
    if (!(config.min_time <= config.max_time)) {
        fail("min time exceeds max time");
    }
    if (!(config.formation_lookahead > config.dt)) {
        fail("formation lookahead must exceed dt");
    }
    if (!(config.motion_bounds.v_min >= 0.0 && config.motion_bounds.v_min <= config.motion_bounds.v_max)) {
        fail("velocity bounds must satisfy 0 <= v_min <= v_max");
    }
    if (!(config.motion_bounds.u_min >= 0.0 && config.motion_bounds.u_min <= config.motion_bounds.u_max)) {
        fail("control bounds must satisfy 0 <= u_min <= u_max");
    }

    if (static_cast<int>(config.agents.size()) != config.agent_count) {
        fail("agent list size does not match N");
    }
    std::set<int> ids;
    for (const auto& agent : config.agents) {
        if (agent.id <= 0) {
            fail("agent ids must be positive");
        }
        if (!ids.insert(agent.id).second) {
            fail("duplicate agent id " + std::to_string(agent.id));
        }
        if (!is_finite(agent.state.position) || !is_finite(agent.state.velocity)) {
            fail("agent states must be finite");
        }
    }
    for (std::size_t i = 0; i < config.agents.size(); ++i) {
        for (std::size_t j = i + 1; j < config.agents.size(); ++j) {
            const double sep = norm(config.agents[i].state.position - config.agents[j].state.position);
            if (sep < 2.0 * config.agent_radius) {
                fail("initial agent separation below 2R");
            }
        }
    }

    if (static_cast<int>(config.goals.size()) != config.goal_count) {
        fail("goal list size does not match M");
    }
    std::set<int> goal_ids;
    for (const auto& goal : config.goals) {
        if (goal.goal_index < 1 || goal.goal_index > config.goal_count) {
            fail("goal indices must run 1..M");
        }
        if (!goal_ids.insert(goal.goal_index).second) {
            fail("duplicate goal index " + std::to_string(goal.goal_index));
        }
        if (goal.periodic_frequency == 0.0 && (goal.periodic_amplitude.x != 0.0 || goal.periodic_amplitude.y != 0.0)) {
            fail("periodic amplitude requires a nonzero frequency");
        }
    }
    // Strict pairwise goal spacing over the whole run horizon.
    for (double t = 0.0; t <= config.max_time + 1e-12; t += config.dt) {
        for (std::size_t i = 0; i < config.goals.size(); ++i) {
            for (std::size_t j = i + 1; j < config.goals.size(); ++j) {
                const double sep =
                    norm(goal_state(config.goals[i], t).position - goal_state(config.goals[j], t).position);
                if (!(sep > 2.0 * config.agent_radius)) {
                    fail("goal spacing: goals " + std::to_string(config.goals[i].goal_index) + " and " +
                         std::to_string(config.goals[j].goal_index) + " within 2R at t=" + std::to_string(t));
                }
            }
        }
    }
}

simulator::simulator(scenario_config config) : config_{std::move(config)} {
    validate_scenario(config_);
    std::vector<agent_initial> ordered = config_.agents;
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    agents_.reserve(ordered.size());
    for (const auto& init : ordered) {
        agent_runtime rt;
        rt.id = init.id;
        rt.state = init.state;
        rt.deadline = config_.initial_deadline;
        agents_.push_back(std::move(rt));
    }
}

simulator::agent_runtime& simulator::agent_ref(int id) {
    for (auto& agent : agents_) {
        if (agent.id == id) {
            return agent;
        }
    }
    throw error{"unknown agent id " + std::to_string(id)};
}

double simulator::effective_deadline(const agent_runtime& agent) const {
    if (agent.deadline - time_ > 1e-4) {
        return agent.deadline;
    }
    return time_ + config_.formation_lookahead;
}

double simulator::energy_toward_goal(const agent_runtime& agent) const {
    if (agent.prescribed_goal == k_no_goal) {
        return 0.0;
    }
    const double deadline = effective_deadline(agent);
    const kinematic_state target = goal_state(config_.goals[static_cast<std::size_t>(agent.prescribed_goal - 1)], deadline);
    const poly_trajectory traj =
        solve_unconstrained_bvp(agent.state, time_, {target.position, target.velocity}, deadline);
    return energy_to_go(traj, time_);
}

std::vector<int> simulator::members_of(int agent_id) const {
    const agent_runtime* self = nullptr;
    for (const auto& agent : agents_) {
        if (agent.id == agent_id) {
            self = &agent;
        }
    }
    if (self == nullptr) {
        throw error{"unknown agent id " + std::to_string(agent_id)};
    }
    std::vector<int> members;
    const double h = config_.sensing_horizon;
    for (const auto& other : agents_) {
        const double sep = norm(other.state.position - self->state.position);
        if (sep <= h + 1e-12 * std::max(1.0, h)) {
            members.push_back(other.id);
        }
    }
    return members;
}

agent_view simulator::build_view(int agent_id, const std::vector<std::size_t>& sizes) const {
    agent_view view;
    const std::vector<int> members = members_of(agent_id);
    for (std::size_t idx = 0; idx < agents_.size(); ++idx) {
        const agent_runtime& agent = agents_[idx];
        if (agent.id == agent_id) {
            view.id = agent.id;
            view.now = time_;
            view.state = agent.state;
            view.deadline = effective_deadline(agent);
            view.prescribed_goal = agent.prescribed_goal;
            view.banned_goals = agent.banned_goals;
        }
        if (!std::binary_search(members.begin(), members.end(), agent.id)) {
            continue;
        }
        neighbor_snapshot snap;
        snap.id = agent.id;
        snap.state = agent.state;
        snap.deadline = effective_deadline(agent);
        snap.neighborhood_size = sizes[idx];
        snap.energy_to_go = energy_toward_goal(agent);
        snap.prescribed_goal = agent.prescribed_goal;
        snap.banned_goals = agent.banned_goals;
        view.neighbors.push_back(std::move(snap));
    }
    return view;
}

agent_view simulator::sense_neighborhood(int agent_id) const {
    std::vector<std::size_t> sizes(agents_.size());
    for (std::size_t idx = 0; idx < agents_.size(); ++idx) {
        sizes[idx] = members_of(agents_[idx].id).size();
    }
    return build_view(agent_id, sizes);
}

kinematic_state simulator::eval_tick_law(const agent_runtime& agent, double t) const {
    if (t < agent.switch_time) {
        return agent.published->eval(t);
    }
    return eval_trajectory(*agent.hold, t);
}

void simulator::publish(agent_runtime& agent, piecewise_trajectory plan) {
    const goal_motion& motion = config_.goals[static_cast<std::size_t>(agent.prescribed_goal - 1)];
    const double tail_start = plan.tf();
    plan.append(goal_track_segment{motion, tail_start, tail_start + k_tail_duration});
    agent.published = std::make_shared<piecewise_trajectory>(std::move(plan));
}

void simulator::log_states(double t) {
    for (const auto& agent : agents_) {
        const kinematic_state s = eval_tick_law(agent, t);
        trajectory_log_.push_back({t, agent.id, s.position, s.velocity, s.control, agent.prescribed_goal});
    }
}

void simulator::tick() {
    const double now = time_;
    const double next = (metrics_.ticks + 1) * config_.dt;

    // 1. Sense: membership lists and sizes feed both the banning protocol
    // and the priority order.
    std::vector<std::vector<int>> members(agents_.size());
    std::vector<std::size_t> sizes(agents_.size());
    for (std::size_t idx = 0; idx < agents_.size(); ++idx) {
        members[idx] = members_of(agents_[idx].id);
        sizes[idx] = members[idx].size();
    }

    // 2. Banning protocol wherever neighborhoods changed or agents are new.
    std::set<int> dirty;
    for (std::size_t idx = 0; idx < agents_.size(); ++idx) {
        if (agents_[idx].prescribed_goal == k_no_goal || agents_[idx].last_members != members[idx]) {
            dirty.insert(agents_[idx].id);
        }
    }
    if (!dirty.empty()) {
        std::vector<agent_view> views;
        views.reserve(agents_.size());
        for (const auto& agent : agents_) {
            views.push_back(build_view(agent.id, sizes));
        }
        const resolve_result result =
            resolve_round(views, config_.goals, now, config_.deadline_extension, dirty);

        metrics_.assignment_rounds += result.report.rounds;
        events_.push_back({event::kind::assignment, now, 0, 0, result.report.rounds,
                           result.report.local_solves, 0.0, ""});
        for (const auto& ban : result.report.bans) {
            events_.push_back({event::kind::ban, now, ban.agent_id, ban.goal_index, ban.round, ban.winner_id,
                               0.0, ""});
            ++metrics_.total_bans;
        }

        for (auto& agent : agents_) {
            const int new_goal = result.prescriptions.at(agent.id);
            if (new_goal != agent.prescribed_goal) {
                agent.prescribed_goal = new_goal;
                agent.replan_needed = true;
                if (agent.arrived) {
                    agent.arrived = false;  // re-routed after arrival
                }
            }
            const auto& new_bans = result.banned_goals.at(agent.id);
            if (new_bans.size() > agent.banned_goals.size()) {
                agent.banned_goals = new_bans;
                agent.deadline = result.deadlines.at(agent.id);
                agent.replan_needed = true;
                agent.arrived = false;
                const double bound =
                    config_.initial_deadline + config_.goal_count * config_.deadline_extension;
                if (agent.deadline > bound + 1e-9) {
                    metrics_.theorem_bound_ok = false;
                    events_.push_back({event::kind::invariant_breach, now, agent.id, 0, 0, 0, agent.deadline,
                                       "deadline exceeds initial t_f + M T"});
                }
            }
        }
    }
    for (std::size_t idx = 0; idx < agents_.size(); ++idx) {
        agents_[idx].last_members = members[idx];
    }

    // 3. Plan in global priority order; lower-priority agents avoid the
    // published trajectories of higher-priority members they can sense.
    std::map<int, agent_summary> summary_by_id;
    std::map<int, std::size_t> index_by_id;
    for (std::size_t idx = 0; idx < agents_.size(); ++idx) {
        summary_by_id[agents_[idx].id] = {agents_[idx].id, sizes[idx], energy_toward_goal(agents_[idx])};
        index_by_id[agents_[idx].id] = idx;
    }
    std::vector<agent_summary> order;
    order.reserve(agents_.size());
    for (const auto& [id, summary] : summary_by_id) {
        order.push_back(summary);
    }
    std::sort(order.begin(), order.end(),
              [](const agent_summary& a, const agent_summary& b) { return has_priority(a, b); });

    planner_params params;
    params.agent_radius = config_.agent_radius;
    params.check_dt = config_.dt / 10.0;
    params.guard_band = k_detect_release;

    for (const agent_summary& entry : order) {
        agent_runtime& agent = agent_ref(entry.agent_id);
        if (agent.arrived) {
            continue;
        }
        if (agent.prescribed_goal == k_no_goal) {
            throw error{"agent " + std::to_string(agent.id) + " has no prescribed goal after assignment"};
        }
        if (agent.deadline - now <= std::max(2.0 * config_.dt, 1e-3)) {
            if (!agent.replan_needed) {
                continue;  // about to arrive; fly out the current plan
            }
            // Re-routed with no room left to the old deadline: grant the
            // standard extension so the new goal is reachable.
            agent.deadline = now + config_.deadline_extension;
        }

        // Leaders: higher-priority members, plus arrived members of any rank.
        // A holding agent has no trajectory problem left to steer with, so
        // the moving agent takes the constraint for that pair.
        std::vector<leader_trajectory> leaders;
        for (const int member_id : members[index_by_id[agent.id]]) {
            if (member_id == agent.id) {
                continue;
            }
            const agent_runtime& other = agent_ref(member_id);
            if (other.published == nullptr) {
                continue;
            }
            if (other.arrived || has_priority(summary_by_id[member_id], entry)) {
                leaders.push_back({other.id, other.published});
            }
        }

        bool need = agent.replan_needed || agent.published == nullptr;
        const char* trigger = need ? "assignment" : "";
        if (!need && !leaders.empty()) {
            const double window_end = std::min(now + k_replan_window, agent.deadline);
            const auto upcoming = first_separation_violation(*agent.published, leaders, now, window_end,
                                                             2.0 * config_.agent_radius, config_.dt,
                                                             k_detect_release);
            if (upcoming.has_value()) {
                need = true;
                trigger = "conflict";
                if (std::getenv("SWARM_DEBUG_REPLAN") != nullptr) {
                    std::fprintf(stderr, "[replan] t=%.3f agent=%d deadline=%.3f vs leader %d at t=%.4f sep=%.6f\n",
                                 now, agent.id, agent.deadline, upcoming->leader_id, upcoming->time,
                                 upcoming->separation);
                }
            }
        }
        if (!need) {
            continue;
        }
        if (std::getenv("SWARM_DEBUG_REPLAN") != nullptr) {
            std::fprintf(stderr, "[replan] t=%.3f agent=%d deadline=%.3f trigger=%s leaders=%zu\n", now,
                         agent.id, agent.deadline, trigger, leaders.size());
        }

        agent_view view = build_view(agent.id, sizes);
        const goal_motion& motion = config_.goals[static_cast<std::size_t>(agent.prescribed_goal - 1)];
        const kinematic_state target = goal_state(motion, agent.deadline);

        plan_result planned = plan_trajectory(view, {target.position, target.velocity}, agent.deadline,
                                              leaders, params);
        for (const auto& rec : planned.junction_solves) {
            events_.push_back({event::kind::junction_solve, now, agent.id, 0, 0, rec.leader_id, rec.energy,
                               "t1=" + std::to_string(rec.t1) + " t2=" + std::to_string(rec.t2) +
                                   " angle=" + std::to_string(rec.entry_angle) +
                                   " speed=" + std::to_string(rec.relative_speed) +
                                   " sign=" + std::to_string(rec.rotation_sign) +
                                   " alternatives=" + std::to_string(rec.feasible_candidates)});
        }
        events_.push_back({event::kind::replan, now, agent.id, agent.prescribed_goal,
                           static_cast<int>(planned.junction_solves.size()), 0, 0.0, ""});
        ++metrics_.replans;
        publish(agent, std::move(planned.trajectory));
        agent.replan_needed = false;
    }

    // 4. Build the laws flown during this tick (hold cubics for agents at
    // their goals) and log the tick-start samples.
    for (auto& agent : agents_) {
        if (agent.arrived) {
            agent.switch_time = now;
        } else if (next >= agent.deadline - 1e-9) {
            agent.switch_time = agent.deadline;
        } else {
            agent.switch_time = std::numeric_limits<double>::infinity();
        }
        if (agent.switch_time <= next) {
            const double start = agent.switch_time;
            const agent_state at_start = [&] {
                if (agent.arrived) {
                    return agent.state;
                }
                const kinematic_state s = agent.published->eval(start);
                return agent_state{s.position, s.velocity};
            }();
            const goal_motion& motion = config_.goals[static_cast<std::size_t>(agent.prescribed_goal - 1)];
            const double hold_end = start + config_.formation_lookahead;
            const kinematic_state target = goal_state(motion, hold_end);
            agent.hold = solve_unconstrained_bvp(at_start, start, {target.position, target.velocity}, hold_end);
        } else {
            agent.hold.reset();
        }
    }
    log_states(now);

    // 5. Separation metric and bound detection on a dt/10 grid.
    const bool check_bounds_now = bounds_active(config_.motion_bounds);
    std::size_t bound_events = 0;
    for (const auto& e : events_) {
        if (e.type == event::kind::bound_violation) {
            ++bound_events;
        }
    }
    for (int sub = 0; sub < 10; ++sub) {
        const double t = now + sub * (config_.dt / 10.0);
        std::vector<vec2> positions(agents_.size());
        for (std::size_t idx = 0; idx < agents_.size(); ++idx) {
            const kinematic_state s = eval_tick_law(agents_[idx], t);
            positions[idx] = s.position;
            if (check_bounds_now && bound_events < k_max_bound_events) {
                const double v = norm(s.velocity);
                const double u = norm(s.control);
                const bounds& b = config_.motion_bounds;
                if (v < b.v_min || v > b.v_max) {
                    events_.push_back({event::kind::bound_violation, t, agents_[idx].id, 0, 0, 0, v, "velocity"});
                    ++bound_events;
                }
                if (u < b.u_min || u > b.u_max) {
                    events_.push_back({event::kind::bound_violation, t, agents_[idx].id, 0, 0, 0, u, "control"});
                    ++bound_events;
                }
            }
        }
        for (std::size_t i = 0; i < agents_.size(); ++i) {
            for (std::size_t j = i + 1; j < agents_.size(); ++j) {
                metrics_.min_separation = std::min(metrics_.min_separation, norm(positions[i] - positions[j]));
            }
        }
    }

    // 6. Advance by exact evaluation; account energy per segment kind.
    for (auto& agent : agents_) {
        const kinematic_state s = eval_tick_law(agent, next);
        if (!agent.arrived) {
            const double transit_end = std::min(next, agent.deadline);
            if (transit_end > now) {
                agent.transit_energy += agent.published->energy_between(now, transit_end);
            }
            if (agent.hold.has_value()) {
                agent.hold_energy += energy_to_go(*agent.hold, agent.switch_time) - energy_to_go(*agent.hold, next);
            }
            if (next >= agent.deadline - 1e-9) {
                agent.arrived = true;
                agent.arrival_time = agent.deadline;
                events_.push_back({event::kind::arrival, agent.deadline, agent.id, agent.prescribed_goal, 0, 0,
                                   0.0, ""});
            }
        } else {
            agent.hold_energy += energy_to_go(*agent.hold, now) - energy_to_go(*agent.hold, next);
        }
        agent.state = {s.position, s.velocity};
    }

    ++metrics_.ticks;
    time_ = next;
}

run_artifacts simulator::run() {
    while (true) {
        bool all_arrived = true;
        for (const auto& agent : agents_) {
            all_arrived = all_arrived && agent.arrived;
        }
        if (all_arrived && time_ >= config_.min_time - 1e-9) {
            break;
        }
        if (time_ >= config_.max_time - 1e-9) {
            halted_ = true;
            events_.push_back({event::kind::halt, time_, 0, 0, 0, 0, 0.0, "max time reached"});
            break;
        }
        tick();
    }

    if (metrics_.ticks > 0) {
        log_states(time_);
    }

    metrics_.completed = !halted_;
    double last_arrival = 0.0;
    const double bound = config_.initial_deadline + config_.goal_count * config_.deadline_extension;
    for (const auto& agent : agents_) {
        metrics_.completed = metrics_.completed && agent.arrived;
        last_arrival = std::max(last_arrival, agent.arrived ? agent.arrival_time : agent.deadline);
        metrics_.total_energy += agent.transit_energy;
        metrics_.formation_energy += agent.hold_energy;
        if (agent.deadline > bound + 1e-9) {
            metrics_.theorem_bound_ok = false;
        }
    }
    metrics_.t_f = last_arrival;
    return {metrics_, trajectory_log_, events_};
}

run_artifacts run_scenario(const scenario_config& config) {
    simulator sim{config};
    return sim.run();
}

}  // namespace swarm
