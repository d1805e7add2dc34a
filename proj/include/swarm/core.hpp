#pragma once

#include <cmath>
#include <limits>
#include <vector>

namespace swarm {

// Planar vector used for positions (m), velocities (m/s) and accelerations (m/s^2).
struct vec2 {
    double x{0.0};
    double y{0.0};

    constexpr vec2() = default;
    constexpr vec2(double x_, double y_) : x{x_}, y{y_} {}

    constexpr vec2 operator+(vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr vec2 operator-(vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr vec2 operator-() const { return {-x, -y}; }
    constexpr vec2 operator*(double k) const { return {x * k, y * k}; }
    constexpr vec2 operator/(double k) const { return {x / k, y / k}; }
    vec2& operator+=(vec2 o) {
        x += o.x;
        y += o.y;
        return *this;
    }
    constexpr bool operator==(const vec2&) const = default;
};

constexpr vec2 operator*(double k, vec2 v) { return v * k; }

constexpr double dot(vec2 a, vec2 b) { return a.x * b.x + a.y * b.y; }

// Scalar z-component of the 3D cross product; positive when b is counterclockwise of a.
constexpr double cross(vec2 a, vec2 b) { return a.x * b.y - a.y * b.x; }

inline double norm(vec2 v) { return std::hypot(v.x, v.y); }

constexpr double norm_squared(vec2 v) { return dot(v, v); }

// Rotation by +90 degrees (counterclockwise perpendicular).
constexpr vec2 perp(vec2 v) { return {-v.y, v.x}; }

inline bool is_finite(vec2 v) { return std::isfinite(v.x) && std::isfinite(v.y); }

// Position/velocity pair of one double-integrator agent.
struct agent_state {
    vec2 position;
    vec2 velocity;

    constexpr bool operator==(const agent_state&) const = default;
};

// Norm bounds on velocity and control. The library only detects violations
// (see check_bounds); it never synthesizes bound-constrained arcs.
struct bounds {
    double v_min{0.0};
    double v_max{std::numeric_limits<double>::infinity()};
    double u_min{0.0};
    double u_max{std::numeric_limits<double>::infinity()};

    constexpr bool operator==(const bounds&) const = default;
};

// Minimum-energy trajectory between two fixed states: control is linear in
// time, velocity quadratic, position cubic. Constants apply to
// trajectory-local time tau = t - t0; the queries below take absolute t and
// shift internally. (Storing constants for absolute t loses the 1e-9
// boundary round-trip at large start times, so the re-based parameterization
// is used; for t0 = 0 the two coincide.)
//
//   u(tau) = a tau + b
//   v(tau) = a/2 tau^2 + b tau + c
//   p(tau) = a/6 tau^3 + b/2 tau^2 + c tau + d
struct poly_trajectory {
    vec2 a;  // m/s^3
    vec2 b;  // m/s^2
    vec2 c;  // m/s
    vec2 d;  // m
    double t0{0.0};
    double tf{0.0};
};

// Instantaneous kinematic sample of a trajectory.
struct kinematic_state {
    vec2 position;
    vec2 velocity;
    vec2 control;
};

// Horizons shorter than this are rejected as degenerate (the per-axis 4x4
// boundary system becomes singular).
inline constexpr double k_degenerate_horizon_epsilon = 1e-6;

// Slack allowed on domain checks so that samples landing on t0/tf up to
// floating-point noise are accepted.
inline constexpr double k_domain_epsilon = 1e-9;

// Solves the two-point boundary value problem for the minimum-energy
// trajectory from `start` at t0 to `end` at tf.
//
// Throws degenerate_horizon when tf - t0 < k_degenerate_horizon_epsilon.
poly_trajectory solve_unconstrained_bvp(const agent_state& start, double t0, const agent_state& end, double tf);

// Evaluates position, velocity and control at absolute time t.
// Throws out_of_domain when t lies outside [t0, tf] (beyond fp slack).
kinematic_state eval_trajectory(const poly_trajectory& traj, double t);

// Remaining control effort integral ∫_t^tf ||u(τ)||^2 dτ, computed in closed
// form from ||a τ + b||^2. Non-negative; zero iff the control vanishes on
// [t, tf]. Throws out_of_domain as eval_trajectory does.
double energy_to_go(const poly_trajectory& traj, double t);

enum class bound_violation_kind {
    velocity_below_min,
    velocity_above_max,
    control_below_min,
    control_above_max,
};

struct bound_violation {
    double time{0.0};
    bound_violation_kind kind{};
    double magnitude{0.0};  // the offending norm value
};

// Samples the trajectory every sample_dt (endpoints included) and records
// every velocity/control norm outside the given bounds. Detection only.
std::vector<bound_violation> check_bounds(const poly_trajectory& traj, const bounds& limits, double sample_dt);

}  // namespace swarm
