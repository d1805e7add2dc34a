#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <swarm/agent_view.hpp>
#include <swarm/core.hpp>
#include <swarm/goals.hpp>

namespace swarm {

// Orthonormal frame on a contact arc: p_hat along the separation vector,
// q_hat along its rate of change.
struct contact_basis {
    vec2 p_hat;
    vec2 q_hat;
};

// The three constraint components that must vanish when a contact arc is
// entered: (4R^2 - s.s, -s.s_dot, -s.s_ddot - s_dot.s_dot). The first two are
// the tangency conditions; the third is the on-arc path condition.
std::array<double, 3> tangency(vec2 s, vec2 s_dot, vec2 s_ddot, double radius);

// Builds the contact basis p_hat = s/(2R), q_hat = s_dot/|s_dot|.
// Throws zero_relative_speed when |s_dot| is below epsilon (the frame is
// undefined; the velocity-matched contact applies instead).
contact_basis compute_contact_basis(vec2 s, vec2 s_dot, double radius);

// A segment where the 2R separation constraint is active against one
// higher-priority agent and the relative speed is held constant. The
// separation vector keeps magnitude 2R and rotates at rate
// relative_speed/(2R) in the rotation_sign direction from entry_angle.
// relative_speed == 0 degenerates to the velocity-matched contact, where the
// follower mirrors the leader's control at a fixed offset.
struct constrained_arc {
    int leader_id{0};
    double t1{0.0};
    double t2{0.0};
    double entry_angle{0.0};     // orientation of the separation vector at t1
    double relative_speed{0.0};  // a >= 0, constant on the arc (m/s)
    int rotation_sign{1};        // +1 counterclockwise, -1 clockwise
    double agent_radius{0.0};    // R
};

class piecewise_trajectory;

// One follower segment in contact with a single leader.
struct contact_segment {
    constrained_arc arc;
    std::shared_ptr<const piecewise_trajectory> leader;
};

// Exact tracking of a goal's motion law; used to extend published
// trajectories past arrival so planners always see full coverage.
struct goal_track_segment {
    goal_motion motion;
    double t1{0.0};
    double t2{0.0};
};

// Time-ordered chain of unconstrained cubics, contact arcs and goal tracks.
// Segments must abut in time; position and velocity are continuous across
// junctions within 1e-6 (validated on append).
class piecewise_trajectory {
  public:
    using segment = std::variant<poly_trajectory, contact_segment, goal_track_segment>;

    piecewise_trajectory() = default;
    explicit piecewise_trajectory(poly_trajectory first);

    void append(segment seg);

    bool empty() const { return segments_.size() == 0; }
    double t0() const;
    double tf() const;
    const std::vector<segment>& segments() const { return segments_; }

    // Throws out_of_domain outside [t0, tf] (beyond fp slack).
    kinematic_state eval(double t) const;

    // Control-effort integral over [ta, tb] intersected with the domain.
    // Closed form on cubic segments, fixed-panel Simpson elsewhere.
    double energy_between(double ta, double tb) const;

  private:
    std::vector<segment> segments_;
};

double segment_start(const piecewise_trajectory::segment& seg);
double segment_end(const piecewise_trajectory::segment& seg);

// Follower state while a constrained arc is active. The follower is the
// leader state displaced by the rotating separation vector and its exact
// time derivatives. Throws out_of_domain outside [t1, t2].
kinematic_state constrained_arc_eval(const constrained_arc& arc, const piecewise_trajectory& leader, double t);

// Follower state while in simultaneous contact with two leaders: the unique
// apex keeping distance 2R to both (isosceles construction), on the branch
// selected by `branch` (+1 along the counterclockwise normal of the
// leader_a->leader_b axis). Position, velocity and control are analytic
// derivatives of the construction.
//
// Throws contact_broken when the leaders separate beyond 4R.
kinematic_state multi_contact_eval(const piecewise_trajectory& leader_a,
                                   const piecewise_trajectory& leader_b,
                                   double radius,
                                   int branch,
                                   double t);

// Picks the branch (+1/-1) whose apex lies closer to the given position.
int choose_multi_contact_branch(const piecewise_trajectory& leader_a,
                                const piecewise_trajectory& leader_b,
                                double radius,
                                vec2 position,
                                double t);

// A higher-priority agent's published trajectory.
struct leader_trajectory {
    int id{0};
    std::shared_ptr<const piecewise_trajectory> trajectory;
};

struct separation_violation {
    double time{0.0};
    int leader_id{0};
    double separation{0.0};
};

// Scans [ta, tb] at check_dt for the first time the follower comes within
// min_separation (+guard) of any leader, then bisects the bracketing step
// down to 1e-9 s. Returns nullopt when the whole window is safe.
std::optional<separation_violation> first_separation_violation(const piecewise_trajectory& follower,
                                                               std::span<const leader_trajectory> leaders,
                                                               double ta,
                                                               double tb,
                                                               double min_separation,
                                                               double check_dt,
                                                               double guard = 1e-9);

struct planner_params {
    double agent_radius{0.25};  // R
    double check_dt{1e-3};      // separation sampling step (tick dt / 10)
    double guard_band{1e-9};
    double junction_epsilon{1e-3};  // minimum spacing between junction times
    // Cushion (fraction of 2R) the junction search keeps between candidate
    // entry/exit segments and other agents, absorbing sampling slivers; the
    // final plan is still validated against exact 2R.
    double search_margin{0.02};
    int max_contact_arcs{4};
    int refine_iterations{220};
};

// One solved contact-arc insertion, kept for the event log. Alternative
// feasible candidates found by the search are counted, the minimum-energy
// one is chosen.
struct junction_solve_record {
    int leader_id{0};
    double t1{0.0};
    double t2{0.0};
    double entry_angle{0.0};
    double relative_speed{0.0};
    int rotation_sign{1};
    double energy{0.0};
    int feasible_candidates{0};
};

struct plan_result {
    piecewise_trajectory trajectory;
    std::vector<junction_solve_record> junction_solves;
};

// Minimum-energy trajectory from the agent's state at `now` to the goal
// state at `deadline` that keeps separation >= 2R from every leader. Returns
// the plain boundary-value cubic when it is already safe; otherwise inserts
// contact arcs whose junction times, entry angle and signed relative speed
// are found by grid-seeded Nelder-Mead search minimizing total energy, with
// state continuity enforced by construction (arcs are built forward from t1
// and the exit cubic starts from the arc-exit state).
//
// Leaders must cover [now, deadline]. Throws no_feasible_trajectory when the
// search cannot produce a safe chain within max_contact_arcs.
plan_result plan_trajectory(const agent_view& self,
                            const agent_state& goal,
                            double deadline,
                            std::span<const leader_trajectory> leaders,
                            const planner_params& params);

// Costate/Hamiltonian bookkeeping at the junctions of one contact arc.
// Everything here is reported, not enforced: state continuity holds by
// construction, while the multiplier jump and Hamiltonian matching are
// generally nonzero for the constant-relative-speed arc.
struct jump_diagnostics {
    double t1{0.0};
    double t2{0.0};
    vec2 nu;  // multiplier pairing the tangency conditions; second entry 0
    double position_residual_t1{0.0};
    double velocity_residual_t1{0.0};
    double position_residual_t2{0.0};
    double velocity_residual_t2{0.0};
    double costate_jump_residual_t1{0.0};  // against the prescribed jump direction
    double costate_continuity_residual_t2{0.0};
    double hamiltonian_mismatch_t1{0.0};
    double hamiltonian_mismatch_t2{0.0};
    double radial_ode_residual_max{0.0};      // near zero: defines the multiplier
    double tangential_ode_residual_max{0.0};  // physical mismatch of the specialization
};

// Diagnostics for every contact arc that sits between two cubic segments.
// Throws singular_nu when the entry multiplier denominator s.v vanishes.
std::vector<jump_diagnostics> compute_jump_diagnostics(const piecewise_trajectory& pieces);

}  // namespace swarm
