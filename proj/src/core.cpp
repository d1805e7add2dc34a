#include <swarm/core.hpp>

#include <algorithm>
#include <string>

#include <swarm/errors.hpp>

namespace swarm {

namespace {

void require_in_domain(const poly_trajectory& traj, double t, const char* what) {
    const double slack = k_domain_epsilon * std::max({1.0, std::abs(traj.t0), std::abs(traj.tf)});
    if (t < traj.t0 - slack || t > traj.tf + slack) {
        throw out_of_domain{std::string{what} + ": t=" + std::to_string(t) + " outside [" +
                            std::to_string(traj.t0) + ", " + std::to_string(traj.tf) + "]"};
    }
}

}  // namespace

poly_trajectory solve_unconstrained_bvp(const agent_state& start, double t0, const agent_state& end, double tf) {
    const double horizon = tf - t0;
    if (!(horizon > k_degenerate_horizon_epsilon)) {
        throw degenerate_horizon{"bvp horizon " + std::to_string(horizon) + " s below epsilon"};
    }

    // Solve in trajectory-local time τ = t - t0, where the boundary system
    // reduces to a 2x2 in (a, b) per axis:
    //   a/6 T^3 + b/2 T^2 = Δp,   a/2 T^2 + b T = Δv,
    // with Δp the position gap net of coasting and Δv the velocity gap.
    const double T = horizon;
    const vec2 dp = end.position - start.position - start.velocity * T;
    const vec2 dv = end.velocity - start.velocity;

    poly_trajectory traj;
    traj.a = (dp * -12.0 + dv * (6.0 * T)) / (T * T * T);
    traj.b = (dp * 6.0 - dv * (2.0 * T)) / (T * T);
    traj.c = start.velocity;
    traj.d = start.position;
    traj.t0 = t0;
    traj.tf = tf;
    return traj;
}

kinematic_state eval_trajectory(const poly_trajectory& traj, double t) {
    require_in_domain(traj, t, "eval_trajectory");
    const double tau = t - traj.t0;
    kinematic_state out;
    out.control = traj.a * tau + traj.b;
    out.velocity = traj.a * (0.5 * tau * tau) + traj.b * tau + traj.c;
    out.position = traj.a * (tau * tau * tau / 6.0) + traj.b * (0.5 * tau * tau) + traj.c * tau + traj.d;
    return out;
}

double energy_to_go(const poly_trajectory& traj, double t) {
    require_in_domain(traj, t, "energy_to_go");
    // ∫_tau^T ||a s + b||^2 ds = a.a (T^3 - tau^3)/3 + a.b (T^2 - tau^2) + b.b (T - tau)
    const double tau = t - traj.t0;
    const double T = traj.tf - traj.t0;
    const double aa = dot(traj.a, traj.a);
    const double ab = dot(traj.a, traj.b);
    const double bb = dot(traj.b, traj.b);
    const double e = aa * (T * T * T - tau * tau * tau) / 3.0 + ab * (T * T - tau * tau) + bb * (T - tau);
    // Rounding can push an identically-zero integral slightly negative.
    return std::max(e, 0.0);
}

std::vector<bound_violation> check_bounds(const poly_trajectory& traj, const bounds& limits, double sample_dt) {
    if (!(sample_dt > 0.0)) {
        throw error{"check_bounds: sample_dt must be positive"};
    }
    std::vector<bound_violation> violations;
    const auto record = [&](double t, bound_violation_kind kind, double magnitude) {
        violations.push_back({t, kind, magnitude});
    };

    double t = traj.t0;
    bool done = false;
    while (!done) {
        if (t >= traj.tf) {
            t = traj.tf;
            done = true;
        }
        const kinematic_state s = eval_trajectory(traj, t);
        const double v = norm(s.velocity);
        const double u = norm(s.control);
        if (v < limits.v_min) {
            record(t, bound_violation_kind::velocity_below_min, v);
        }
        if (v > limits.v_max) {
            record(t, bound_violation_kind::velocity_above_max, v);
        }
        if (u < limits.u_min) {
            record(t, bound_violation_kind::control_below_min, u);
        }
        if (u > limits.u_max) {
            record(t, bound_violation_kind::control_above_max, u);
        }
        t += sample_dt;
    }
    return violations;
}

}  // namespace swarm
