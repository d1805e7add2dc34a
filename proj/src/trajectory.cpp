#include <swarm/trajectory.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>

#include <swarm/errors.hpp>

namespace swarm {

namespace {

constexpr double k_pi = 3.14159265358979323846;

vec2 unit_from_angle(double theta) { return {std::cos(theta), std::sin(theta)}; }

double wrap_angle(double a) {
    while (a > k_pi) {
        a -= 2.0 * k_pi;
    }
    while (a < -k_pi) {
        a += 2.0 * k_pi;
    }
    return a;
}

// Composite Simpson integration with an even panel count.
double simpson(const std::function<double(double)>& f, double lo, double hi, int panels) {
    if (!(hi > lo)) {
        return 0.0;
    }
    if (panels % 2 != 0) {
        ++panels;
    }
    const double h = (hi - lo) / panels;
    double acc = f(lo) + f(hi);
    for (int k = 1; k < panels; ++k) {
        acc += f(lo + k * h) * (k % 2 == 0 ? 2.0 : 4.0);
    }
    return acc * h / 3.0;
}

}  // namespace

std::array<double, 3> tangency(vec2 s, vec2 s_dot, vec2 s_ddot, double radius) {
    return {4.0 * radius * radius - dot(s, s), -dot(s, s_dot), -dot(s, s_ddot) - dot(s_dot, s_dot)};
}

contact_basis compute_contact_basis(vec2 s, vec2 s_dot, double radius) {
    const double speed = norm(s_dot);
    if (speed < 1e-9) {
        throw zero_relative_speed{"contact basis undefined at relative speed " + std::to_string(speed)};
    }
    return {s / (2.0 * radius), s_dot / speed};
}

double segment_start(const piecewise_trajectory::segment& seg) {
    return std::visit(
        [](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, poly_trajectory>) {
                return s.t0;
            } else if constexpr (std::is_same_v<T, contact_segment>) {
                return s.arc.t1;
            } else {
                return s.t1;
            }
        },
        seg);
}

double segment_end(const piecewise_trajectory::segment& seg) {
    return std::visit(
        [](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, poly_trajectory>) {
                return s.tf;
            } else if constexpr (std::is_same_v<T, contact_segment>) {
                return s.arc.t2;
            } else {
                return s.t2;
            }
        },
        seg);
}

namespace {

kinematic_state eval_segment(const piecewise_trajectory::segment& seg, double t) {
    return std::visit(
        [t](const auto& s) -> kinematic_state {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, poly_trajectory>) {
                return eval_trajectory(s, t);
            } else if constexpr (std::is_same_v<T, contact_segment>) {
                return constrained_arc_eval(s.arc, *s.leader, t);
            } else {
                return goal_state(s.motion, t);
            }
        },
        seg);
}

}  // namespace

piecewise_trajectory::piecewise_trajectory(poly_trajectory first) { segments_.push_back(std::move(first)); }

void piecewise_trajectory::append(segment seg) {
    const double start = segment_start(seg);
    const double end = segment_end(seg);
    if (!(end > start)) {
        throw error{"piecewise segment must have positive duration"};
    }
    if (!segments_.empty()) {
        const double prev_end = tf();
        if (std::abs(start - prev_end) > 1e-9 * std::max(1.0, std::abs(prev_end))) {
            throw error{"piecewise segments must abut in time (" + std::to_string(prev_end) + " vs " +
                        std::to_string(start) + ")"};
        }
        const kinematic_state before = eval_segment(segments_.back(), prev_end);
        const kinematic_state after = eval_segment(seg, start);
        if (norm(before.position - after.position) > 1e-6 || norm(before.velocity - after.velocity) > 1e-6) {
            throw error{"piecewise segments must be state-continuous at junctions"};
        }
    }
    segments_.push_back(std::move(seg));
}

double piecewise_trajectory::t0() const {
    if (segments_.empty()) {
        throw error{"empty piecewise trajectory"};
    }
    return segment_start(segments_.front());
}

double piecewise_trajectory::tf() const {
    if (segments_.empty()) {
        throw error{"empty piecewise trajectory"};
    }
    return segment_end(segments_.back());
}

kinematic_state piecewise_trajectory::eval(double t) const {
    if (segments_.empty()) {
        throw error{"empty piecewise trajectory"};
    }
    const double lo = t0();
    const double hi = tf();
    const double slack = k_domain_epsilon * std::max({1.0, std::abs(lo), std::abs(hi)});
    if (t < lo - slack || t > hi + slack) {
        throw out_of_domain{"piecewise eval at t=" + std::to_string(t) + " outside [" + std::to_string(lo) +
                            ", " + std::to_string(hi) + "]"};
    }
    // Segment whose [start, end] contains t; ties at junctions resolve to the
    // later segment (states are continuous there).
    for (std::size_t k = 0; k < segments_.size(); ++k) {
        const bool last = k + 1 == segments_.size();
        if (t < segment_end(segments_[k]) || last) {
            return eval_segment(segments_[k], t);
        }
    }
    return eval_segment(segments_.back(), t);  // unreachable
}

double piecewise_trajectory::energy_between(double ta, double tb) const {
    double total = 0.0;
    for (const auto& seg : segments_) {
        const double lo = std::max(ta, segment_start(seg));
        const double hi = std::min(tb, segment_end(seg));
        if (!(hi > lo)) {
            continue;
        }
        if (const auto* poly = std::get_if<poly_trajectory>(&seg)) {
            total += energy_to_go(*poly, lo) - energy_to_go(*poly, hi);
        } else {
            const int panels = std::max(16, static_cast<int>(std::ceil((hi - lo) / 5e-4)));
            total += simpson([&](double t) { return norm_squared(eval_segment(seg, t).control); }, lo, hi,
                             std::min(panels, 20000));
        }
    }
    return total;
}

kinematic_state constrained_arc_eval(const constrained_arc& arc, const piecewise_trajectory& leader, double t) {
    const double slack = k_domain_epsilon * std::max({1.0, std::abs(arc.t1), std::abs(arc.t2)});
    if (t < arc.t1 - slack || t > arc.t2 + slack) {
        throw out_of_domain{"constrained_arc_eval at t=" + std::to_string(t) + " outside arc"};
    }
    const double diameter = 2.0 * arc.agent_radius;
    const double omega = arc.rotation_sign * arc.relative_speed / diameter;
    const double theta = arc.entry_angle + omega * (t - arc.t1);
    const vec2 e = unit_from_angle(theta);
    const vec2 s = e * diameter;
    const vec2 s_dot = perp(e) * (diameter * omega);
    const vec2 s_ddot = e * (-diameter * omega * omega);

    const kinematic_state lead = leader.eval(t);
    return {lead.position - s, lead.velocity - s_dot, lead.control - s_ddot};
}

kinematic_state multi_contact_eval(const piecewise_trajectory& leader_a,
                                   const piecewise_trajectory& leader_b,
                                   double radius,
                                   int branch,
                                   double t) {
    const kinematic_state a = leader_a.eval(t);
    const kinematic_state b = leader_b.eval(t);
    const vec2 r = b.position - a.position;
    const double d = norm(r);
    const double reach = 4.0 * radius;
    if (d > reach * (1.0 + 1e-9)) {
        throw contact_broken{"leaders " + std::to_string(d) + " m apart exceed the 4R contact reach"};
    }
    if (d < 1e-12) {
        throw error{"multi_contact_eval: coincident leaders"};
    }
    const double sigma = branch >= 0 ? 1.0 : -1.0;

    const vec2 e = r / d;
    const vec2 n = perp(e);
    const vec2 m = (a.position + b.position) * 0.5;
    const double g2 = std::max(0.0, 4.0 * radius * radius - 0.25 * d * d);
    const double g = std::sqrt(g2);

    const vec2 r_dot = b.velocity - a.velocity;
    const double d_dot = dot(e, r_dot);
    const vec2 e_dot = (r_dot - e * d_dot) / d;
    const vec2 n_dot = perp(e_dot);
    const vec2 m_dot = (a.velocity + b.velocity) * 0.5;
    // At the degenerate collinear apex (d = 4R) the offset and its rates vanish.
    const double g_dot = g > 1e-9 ? -d * d_dot / (4.0 * g) : 0.0;

    const vec2 r_ddot = b.control - a.control;
    const double d_ddot = (dot(r_dot, r_dot) + dot(r, r_ddot) - d_dot * d_dot) / d;
    const vec2 e_ddot = (r_ddot - e_dot * (2.0 * d_dot) - e * d_ddot) / d;
    const vec2 n_ddot = perp(e_ddot);
    const vec2 m_ddot = (a.control + b.control) * 0.5;
    const double g_ddot = g > 1e-9 ? (-(d_dot * d_dot + d * d_ddot) * 0.5 - 2.0 * g_dot * g_dot) / (2.0 * g) : 0.0;

    kinematic_state out;
    out.position = m + n * (sigma * g);
    out.velocity = m_dot + (n_dot * g + n * g_dot) * sigma;
    out.control = m_ddot + (n_ddot * g + n_dot * (2.0 * g_dot) + n * g_ddot) * sigma;
    return out;
}

int choose_multi_contact_branch(const piecewise_trajectory& leader_a,
                                const piecewise_trajectory& leader_b,
                                double radius,
                                vec2 position,
                                double t) {
    const vec2 plus = multi_contact_eval(leader_a, leader_b, radius, +1, t).position;
    const vec2 minus = multi_contact_eval(leader_a, leader_b, radius, -1, t).position;
    return norm(position - plus) <= norm(position - minus) ? +1 : -1;
}

std::optional<separation_violation> first_separation_violation(const piecewise_trajectory& follower,
                                                               std::span<const leader_trajectory> leaders,
                                                               double ta,
                                                               double tb,
                                                               double min_separation,
                                                               double check_dt,
                                                               double guard) {
    if (leaders.empty() || !(tb > ta)) {
        return std::nullopt;
    }
    const double threshold = min_separation + guard;

    const auto clearance = [&](double t) {
        const vec2 p = follower.eval(t).position;
        double worst = std::numeric_limits<double>::infinity();
        int worst_id = 0;
        for (const auto& lead : leaders) {
            const double sep = norm(lead.trajectory->eval(t).position - p);
            if (sep < worst) {
                worst = sep;
                worst_id = lead.id;
            }
        }
        return std::pair<double, int>{worst - threshold, worst_id};
    };

    double prev_t = ta;
    auto prev = clearance(ta);
    if (prev.first < 0.0) {
        return separation_violation{ta, prev.second, prev.first + threshold};
    }
    bool done = false;
    for (double t = ta + check_dt; !done;) {
        if (t >= tb) {
            t = tb;
            done = true;
        }
        const auto cur = clearance(t);
        if (cur.first < 0.0) {
            // Bisect the bracketing step down to 1e-9 s.
            double lo = prev_t;
            double hi = t;
            while (hi - lo > 1e-9) {
                const double mid = 0.5 * (lo + hi);
                if (clearance(mid).first < 0.0) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            const auto at = clearance(hi);
            return separation_violation{hi, at.second, at.first + threshold};
        }
        prev_t = t;
        prev = cur;
        t += check_dt;
    }
    return std::nullopt;
}

namespace {

// Worst constraint penetration (meters) of the follower over [ta, tb].
double worst_penetration(const piecewise_trajectory& follower,
                         std::span<const leader_trajectory> leaders,
                         double ta,
                         double tb,
                         double min_separation,
                         double sample_dt) {
    double depth = 0.0;
    bool done = false;
    for (double t = ta; !done;) {
        if (t >= tb) {
            t = tb;
            done = true;
        }
        const vec2 p = follower.eval(t).position;
        for (const auto& lead : leaders) {
            const double sep = norm(lead.trajectory->eval(t).position - p);
            depth = std::max(depth, min_separation - sep);
        }
        t += sample_dt;
    }
    return depth;
}

using search_point = std::array<double, 4>;  // (t1, t2, entry_angle, signed rate)

search_point nelder_mead(const std::function<double(const search_point&)>& f,
                         const search_point& x0,
                         const search_point& step,
                         int iterations) {
    constexpr std::size_t n = 4;
    std::array<search_point, n + 1> simplex;
    std::array<double, n + 1> value;
    simplex[0] = x0;
    for (std::size_t i = 0; i < n; ++i) {
        simplex[i + 1] = x0;
        simplex[i + 1][i] += step[i];
    }
    for (std::size_t i = 0; i <= n; ++i) {
        value[i] = f(simplex[i]);
    }
    std::array<std::size_t, n + 1> order;
    for (int it = 0; it < iterations; ++it) {
        for (std::size_t i = 0; i <= n; ++i) {
            order[i] = i;
        }
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });

        const std::size_t best = order[0];
        const std::size_t worst = order[n];
        search_point centroid{};
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) {
                continue;
            }
            for (std::size_t k = 0; k < n; ++k) {
                centroid[k] += simplex[i][k] / static_cast<double>(n);
            }
        }
        const auto blend = [&](double coeff) {
            search_point x;
            for (std::size_t k = 0; k < n; ++k) {
                x[k] = centroid[k] + coeff * (simplex[worst][k] - centroid[k]);
            }
            return x;
        };

        const search_point reflected = blend(-1.0);
        const double f_reflected = f(reflected);
        if (f_reflected < value[best]) {
            const search_point expanded = blend(-2.0);
            const double f_expanded = f(expanded);
            if (f_expanded < f_reflected) {
                simplex[worst] = expanded;
                value[worst] = f_expanded;
            } else {
                simplex[worst] = reflected;
                value[worst] = f_reflected;
            }
            continue;
        }
        if (f_reflected < value[order[n - 1]]) {
            simplex[worst] = reflected;
            value[worst] = f_reflected;
            continue;
        }
        const search_point contracted = blend(0.5);
        const double f_contracted = f(contracted);
        if (f_contracted < value[worst]) {
            simplex[worst] = contracted;
            value[worst] = f_contracted;
            continue;
        }
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) {
                continue;
            }
            for (std::size_t k = 0; k < n; ++k) {
                simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
            }
            value[i] = f(simplex[i]);
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i <= n; ++i) {
        if (value[i] < value[best]) {
            best = i;
        }
    }
    return simplex[best];
}

struct arc_candidate {
    poly_trajectory entry;
    constrained_arc arc;
    poly_trajectory exit;
    double energy{0.0};
    // Penetration past exact contact (gates feasibility)...
    double entry_arc_depth{0.0};
    double exit_depth{0.0};
    // ...and past the cushioned threshold (steers the optimizer clear).
    double entry_arc_pressure{0.0};
    double exit_pressure{0.0};
};

double arc_energy(const constrained_arc& arc, const piecewise_trajectory& leader) {
    const int panels = std::max(32, static_cast<int>(std::ceil((arc.t2 - arc.t1) / 1e-3)));
    return simpson(
        [&](double t) { return norm_squared(constrained_arc_eval(arc, leader, t).control); }, arc.t1, arc.t2,
        std::min(panels, 20000));
}

class junction_search {
  public:
    junction_search(const agent_state& start,
                    double ta,
                    const agent_state& goal,
                    double tb,
                    const leader_trajectory& contacted,
                    std::span<const leader_trajectory> all_leaders,
                    const poly_trajectory& direct,
                    const planner_params& params)
        : start_{start},
          ta_{ta},
          goal_{goal},
          tb_{tb},
          contacted_{contacted},
          leaders_{all_leaders},
          direct_{direct},
          params_{params} {
        min_sep_ = 2.0 * params.agent_radius;
        cushion_ = min_sep_ * params.search_margin;
        coarse_dt_ = std::max(params.check_dt * 4.0, (tb - ta) / 600.0);
        penalty_scale_ = 1e5 * (1.0 + energy_to_go(direct, ta));
        for (const auto& lead : all_leaders) {
            if (lead.id != contacted.id) {
                others_.push_back(lead);
            }
        }
    }

    std::optional<arc_candidate> run(double first_violation_time, int* feasible_count) {
        const std::vector<search_point> seeds = make_seeds(first_violation_time);
        std::vector<std::pair<double, search_point>> ranked;
        for (const auto& seed : seeds) {
            ranked.emplace_back(objective_at(seed, coarse_dt_), seed);
        }
        std::sort(ranked.begin(), ranked.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        if (std::getenv("SWARM_DEBUG_JUNCTION") != nullptr) {
            std::fprintf(stderr, "[junction] %zu seeds, best objectives:\n", ranked.size());
            for (std::size_t k = 0; k < std::min<std::size_t>(8, ranked.size()); ++k) {
                std::fprintf(stderr, "  f=%.4g x=(%.3f %.3f %.3f %.3f)\n", ranked[k].first,
                             ranked[k].second[0], ranked[k].second[1], ranked[k].second[2],
                             ranked[k].second[3]);
            }
        }
        std::vector<arc_candidate> finalists;
        const std::size_t refine_count = std::min<std::size_t>(4, ranked.size());
        for (std::size_t k = 0; k < refine_count; ++k) {
            const search_point& x0 = ranked[k].second;
            const double span = tb_ - ta_;
            const search_point step{0.06 * span, 0.08 * span, 0.3, 0.25 * std::abs(x0[3]) + 0.1};
            search_point best = nelder_mead(
                [this](const search_point& x) { return objective_at(x, coarse_dt_); }, x0, step,
                params_.refine_iterations);
            // Polish at full sampling resolution so slivers the coarse grid
            // missed get penalized out.
            const search_point fine_step{0.01 * span, 0.015 * span, 0.08,
                                         0.08 * std::abs(best[3]) + 0.03};
            best = nelder_mead([this](const search_point& x) { return objective_at(x, params_.check_dt); },
                               best, fine_step, 60);
            if (auto cand = build(best)) {
                score(*cand, params_.check_dt);
                finalists.push_back(std::move(*cand));
            }
        }
        if (std::getenv("SWARM_DEBUG_JUNCTION") != nullptr) {
            for (const auto& c : finalists) {
                std::fprintf(stderr, "  finalist E=%.4g entry_depth=%.4g exit_depth=%.4g t1=%.3f t2=%.3f th=%.3f a=%.3f s=%d\n",
                             c.energy, c.entry_arc_depth, c.exit_depth, c.arc.t1, c.arc.t2,
                             c.arc.entry_angle, c.arc.relative_speed, c.arc.rotation_sign);
            }
        }
        if (finalists.empty()) {
            return std::nullopt;
        }

        // Prefer fully safe candidates by energy, then safe-entry candidates
        // whose exit still violates (the caller re-plans the exit segment).
        // Gate depths are measured against exact contact; the cushioned
        // pressure terms already steered the optimizer clear where possible.
        const auto fully_safe = [](const arc_candidate& c) {
            return c.entry_arc_depth <= 1e-9 && c.exit_depth <= 1e-9;
        };
        const auto entry_safe = [](const arc_candidate& c) { return c.entry_arc_depth <= 1e-9; };
        std::sort(finalists.begin(), finalists.end(),
                  [&](const arc_candidate& a, const arc_candidate& b) {
                      if (fully_safe(a) != fully_safe(b)) {
                          return fully_safe(a);
                      }
                      if (entry_safe(a) != entry_safe(b)) {
                          return entry_safe(a);
                      }
                      return a.energy < b.energy;
                  });
        if (feasible_count != nullptr) {
            *feasible_count = static_cast<int>(std::count_if(finalists.begin(), finalists.end(), fully_safe));
        }
        const arc_candidate& best = finalists.front();
        if (!entry_safe(best)) {
            return std::nullopt;
        }
        return best;
    }

  private:
    std::vector<search_point> make_seeds(double violation_time) const {
        std::vector<search_point> seeds;
        const double span = tb_ - ta_;
        const double eps = params_.junction_epsilon;

        // Estimate when the direct trajectory would stop violating the
        // contacted leader, to size the arc duration.
        double last_violation = violation_time;
        for (double t = violation_time; t <= tb_; t += coarse_dt_) {
            const double sep =
                norm(contacted_.trajectory->eval(t).position - eval_trajectory(direct_, t).position);
            if (sep < min_sep_ * 1.02) {
                last_violation = t;
            }
        }
        // Bearing of the separation vector once the direct paths separate;
        // used to size arcs by the rotation they must sweep.
        const double exit_ref = std::min(tb_, last_violation + 0.1 * (tb_ - ta_));
        const vec2 s_exit =
            contacted_.trajectory->eval(exit_ref).position - eval_trajectory(direct_, exit_ref).position;
        const double theta_exit = std::atan2(s_exit.y, s_exit.x);

        for (const double frac : {0.2, 0.45, 0.7}) {
            double t1 = violation_time - frac * (violation_time - ta_);
            t1 = std::clamp(t1, ta_ + eps, tb_ - 3.0 * eps);

            const kinematic_state mine = eval_trajectory(direct_, t1);
            const kinematic_state lead = contacted_.trajectory->eval(t1);
            const vec2 s = lead.position - mine.position;
            const double theta = std::atan2(s.y, s.x);
            const vec2 s_dot = lead.velocity - mine.velocity;
            const double tangential = dot(s_dot, perp(unit_from_angle(theta)));
            const double speed_scale = std::max(norm(s_dot), 0.2);

            std::vector<double> rates;
            if (std::abs(tangential) > 0.05 * speed_scale) {
                rates.push_back(tangential);
                rates.push_back(-tangential);
            }
            rates.push_back(speed_scale);
            rates.push_back(-speed_scale);

            const double window = std::max(last_violation - t1, 0.15 * span);
            for (const double rate : rates) {
                std::vector<double> durations;
                for (const double stretch : {0.7, 1.2, 1.8}) {
                    durations.push_back(stretch * window);
                }
                // Rotation-sized duration: sweep the separation bearing from
                // entry to its post-encounter direction at rate/(2R).
                double sweep = rate >= 0.0 ? theta_exit - theta : theta - theta_exit;
                while (sweep <= 0.0) {
                    sweep += 2.0 * k_pi;
                }
                const double omega = std::abs(rate) / (2.0 * params_.agent_radius);
                if (omega > 1e-6) {
                    durations.push_back(sweep / omega);
                    durations.push_back(0.6 * sweep / omega);
                }
                for (const double duration : durations) {
                    const double t2 = std::clamp(t1 + duration, t1 + eps, tb_ - eps);
                    if (t2 - t1 < eps) {
                        continue;
                    }
                    seeds.push_back({t1, t2, theta, rate});
                }
            }
        }
        return seeds;
    }

    std::optional<arc_candidate> build(const search_point& raw) const {
        const double eps = params_.junction_epsilon;
        const double t1 = std::clamp(raw[0], ta_ + eps, tb_ - 2.0 * eps);
        const double t2 = std::clamp(raw[1], t1 + eps, tb_ - eps);
        const double theta = raw[2];
        const double rate = raw[3];

        arc_candidate cand;
        cand.arc.leader_id = contacted_.id;
        cand.arc.t1 = t1;
        cand.arc.t2 = t2;
        cand.arc.entry_angle = wrap_angle(theta);
        cand.arc.relative_speed = std::abs(rate);
        cand.arc.rotation_sign = rate >= 0.0 ? 1 : -1;
        cand.arc.agent_radius = params_.agent_radius;

        const kinematic_state lead = contacted_.trajectory->eval(t1);
        const vec2 e = unit_from_angle(cand.arc.entry_angle);
        const agent_state entry_target{lead.position - e * (2.0 * params_.agent_radius),
                                       lead.velocity - perp(e) * rate};
        try {
            cand.entry = solve_unconstrained_bvp(start_, ta_, entry_target, t1);
            const kinematic_state exit_state = constrained_arc_eval(cand.arc, *contacted_.trajectory, t2);
            cand.exit = solve_unconstrained_bvp({exit_state.position, exit_state.velocity}, t2, goal_, tb_);
        } catch (const degenerate_horizon&) {
            return std::nullopt;
        }
        cand.energy = energy_to_go(cand.entry, ta_) + arc_energy(cand.arc, *contacted_.trajectory) +
                      energy_to_go(cand.exit, t2);
        return cand;
    }

    void score(arc_candidate& cand, double sample_dt) const {
        // Gates measure penetration past exact contact (the entry approaches
        // the contacted leader tangentially and touches 2R by construction);
        // pressures measure against a cushioned threshold for other agents,
        // pushing optima a sliver clear of everyone where room exists.
        const double exact = min_sep_ - 1e-9;
        const double padded = min_sep_ + 0.5 * cushion_;
        const std::vector<leader_trajectory> contacted_only{contacted_};

        piecewise_trajectory entry_piece{cand.entry};
        piecewise_trajectory arc_piece;
        arc_piece.append(contact_segment{cand.arc, contacted_.trajectory});
        piecewise_trajectory exit_piece{cand.exit};

        double gate = worst_penetration(entry_piece, contacted_only, ta_, cand.arc.t1, exact, sample_dt);
        double pressure = gate;
        if (!others_.empty()) {
            gate = std::max(gate, worst_penetration(entry_piece, others_, ta_, cand.arc.t1, exact, sample_dt));
            gate = std::max(gate,
                            worst_penetration(arc_piece, others_, cand.arc.t1, cand.arc.t2, exact, sample_dt));
            pressure = std::max(
                pressure, worst_penetration(entry_piece, others_, ta_, cand.arc.t1, padded, sample_dt));
            pressure = std::max(
                pressure, worst_penetration(arc_piece, others_, cand.arc.t1, cand.arc.t2, padded, sample_dt));
        }
        cand.entry_arc_depth = gate;
        cand.entry_arc_pressure = pressure;

        cand.exit_depth = worst_penetration(exit_piece, contacted_only, cand.arc.t2, tb_, exact, sample_dt);
        cand.exit_pressure = cand.exit_depth;
        if (!others_.empty()) {
            cand.exit_depth = std::max(
                cand.exit_depth, worst_penetration(exit_piece, others_, cand.arc.t2, tb_, exact, sample_dt));
            cand.exit_pressure = std::max(
                cand.exit_pressure, worst_penetration(exit_piece, others_, cand.arc.t2, tb_, padded, sample_dt));
        }
    }

    double objective_at(const search_point& x, double sample_dt) const {
        auto cand = build(x);
        if (!cand) {
            return 1e30;
        }
        score(*cand, sample_dt);
        return cand->energy + penalty_scale_ * (std::max(cand->entry_arc_pressure, 0.0) +
                                                std::max(cand->exit_pressure, 0.0));
    }

    agent_state start_;
    double ta_;
    agent_state goal_;
    double tb_;
    const leader_trajectory& contacted_;
    std::span<const leader_trajectory> leaders_;
    std::vector<leader_trajectory> others_;
    const poly_trajectory& direct_;
    const planner_params& params_;
    double min_sep_{0.0};
    double cushion_{0.0};
    double coarse_dt_{0.0};
    double penalty_scale_{0.0};
};

std::vector<piecewise_trajectory::segment> plan_pieces(const agent_state& state,
                                                       double ta,
                                                       const agent_state& goal,
                                                       double tb,
                                                       std::span<const leader_trajectory> leaders,
                                                       const planner_params& params,
                                                       int arcs_left,
                                                       std::vector<junction_solve_record>& records) {
    const poly_trajectory direct = solve_unconstrained_bvp(state, ta, goal, tb);
    const piecewise_trajectory probe{direct};
    // Detection runs a hair below exact contact: chains legitimately ride the
    // boundary at separation exactly 2R, and inflating the radius here would
    // re-trigger on every arc exit.
    const auto violation = first_separation_violation(probe, leaders, ta, tb, 2.0 * params.agent_radius,
                                                      params.check_dt, -std::abs(params.guard_band));
    if (!violation) {
        return {direct};
    }
    if (arcs_left <= 0) {
        throw no_feasible_trajectory{"contact-arc budget exhausted before a safe chain was found"};
    }

    // Try the violated leaders in order of first breach; an arc around the
    // earliest offender usually resolves the encounter, but crowded scenes
    // sometimes only admit an arc around a later one.
    std::vector<std::pair<double, const leader_trajectory*>> offenders;
    for (const auto& lead : leaders) {
        const std::vector<leader_trajectory> alone{lead};
        const auto hit = first_separation_violation(probe, alone, ta, tb, 2.0 * params.agent_radius,
                                                    params.check_dt, -std::abs(params.guard_band));
        if (hit) {
            offenders.emplace_back(hit->time, &lead);
        }
    }
    std::sort(offenders.begin(), offenders.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    std::optional<arc_candidate> cand;
    int feasible_count = 0;
    for (const auto& [breach_time, contacted] : offenders) {
        junction_search search{state, ta, goal, tb, *contacted, leaders, direct, params};
        cand = search.run(breach_time, &feasible_count);
        if (cand) {
            break;
        }
    }
    if (!cand) {
        throw no_feasible_trajectory{"junction search found no safe entry/arc against agent " +
                                     std::to_string(violation->leader_id)};
    }
    records.push_back({cand->arc.leader_id, cand->arc.t1, cand->arc.t2, cand->arc.entry_angle,
                       cand->arc.relative_speed, cand->arc.rotation_sign, cand->energy, feasible_count});

    std::shared_ptr<const piecewise_trajectory> arc_leader;
    for (const auto& lead : leaders) {
        if (lead.id == cand->arc.leader_id) {
            arc_leader = lead.trajectory;
        }
    }

    std::vector<piecewise_trajectory::segment> pieces;
    pieces.emplace_back(cand->entry);
    pieces.emplace_back(contact_segment{cand->arc, arc_leader});

    const kinematic_state exit_state = constrained_arc_eval(cand->arc, *arc_leader, cand->arc.t2);
    auto rest = plan_pieces({exit_state.position, exit_state.velocity}, cand->arc.t2, goal, tb, leaders, params,
                            arcs_left - 1, records);
    for (auto& seg : rest) {
        pieces.push_back(std::move(seg));
    }
    return pieces;
}

}  // namespace

plan_result plan_trajectory(const agent_view& self,
                            const agent_state& goal,
                            double deadline,
                            std::span<const leader_trajectory> leaders,
                            const planner_params& params) {
    for (const auto& lead : leaders) {
        if (lead.trajectory == nullptr || lead.trajectory->t0() > self.now + 1e-9 ||
            lead.trajectory->tf() < deadline - 1e-9) {
            throw error{"leader trajectory " + std::to_string(lead.id) + " does not cover the planning horizon"};
        }
    }

    plan_result result;
    auto pieces = plan_pieces(self.state, self.now, goal, deadline, leaders, params,
                              params.max_contact_arcs, result.junction_solves);
    for (auto& seg : pieces) {
        result.trajectory.append(std::move(seg));
    }

    // Final validation: the flown chain must stay within a tenth of the
    // acceptance band (2R - 1e-6) of exact contact.
    const auto violation = first_separation_violation(result.trajectory, leaders, self.now, deadline,
                                                      2.0 * params.agent_radius, params.check_dt, -1e-7);
    if (violation) {
        throw no_feasible_trajectory{"planned chain still breaches separation against agent " +
                                     std::to_string(violation->leader_id) + " at t=" +
                                     std::to_string(violation->time)};
    }
    return result;
}

namespace {

vec2 leader_control_rate(const piecewise_trajectory& leader, double t, double h) {
    const vec2 up = leader.eval(t + h).control;
    const vec2 um = leader.eval(t - h).control;
    return (up - um) / (2.0 * h);
}

vec2 leader_control_curvature(const piecewise_trajectory& leader, double t, double h) {
    const vec2 up = leader.eval(t + h).control;
    const vec2 u0 = leader.eval(t).control;
    const vec2 um = leader.eval(t - h).control;
    return (up - u0 * 2.0 + um) / (h * h);
}

}  // namespace

std::vector<jump_diagnostics> compute_jump_diagnostics(const piecewise_trajectory& pieces) {
    std::vector<jump_diagnostics> out;
    const auto& segs = pieces.segments();
    for (std::size_t k = 0; k < segs.size(); ++k) {
        const auto* contact = std::get_if<contact_segment>(&segs[k]);
        if (contact == nullptr || k == 0 || k + 1 >= segs.size()) {
            continue;
        }
        const auto* before = std::get_if<poly_trajectory>(&segs[k - 1]);
        const auto* after = std::get_if<poly_trajectory>(&segs[k + 1]);
        if (before == nullptr || after == nullptr) {
            continue;
        }
        const constrained_arc& arc = contact->arc;
        const piecewise_trajectory& leader = *contact->leader;
        const double R = arc.agent_radius;
        const double a = arc.relative_speed;

        jump_diagnostics diag;
        diag.t1 = arc.t1;
        diag.t2 = arc.t2;

        // Entry-side states and the multiplier nu from the incoming arc.
        const kinematic_state in = eval_trajectory(*before, arc.t1);
        const kinematic_state arc_entry = constrained_arc_eval(arc, leader, arc.t1);
        const kinematic_state lead_entry = leader.eval(arc.t1);
        const vec2 s1 = lead_entry.position - arc_entry.position;
        diag.position_residual_t1 = norm(in.position - arc_entry.position);
        diag.velocity_residual_t1 = norm(in.velocity - arc_entry.velocity);

        const double sv = dot(s1, in.velocity);
        if (std::abs(sv) < 1e-9) {
            throw singular_nu{"s.v = " + std::to_string(sv) + " at arc entry"};
        }
        diag.nu = {-norm_squared(in.control) / (2.0 * sv), 0.0};

        if (a < 1e-9) {
            // Velocity-matched contact: the rotating frame is undefined and
            // the remaining entries stay at their defaults.
            out.push_back(diag);
            continue;
        }

        const double diameter = 2.0 * R;
        const double omega = arc.rotation_sign * a / diameter;
        const double fd_h = std::min(1e-5, 0.25 * (arc.t2 - arc.t1));

        const auto basis_at = [&](double t) {
            const double theta = arc.entry_angle + omega * (t - arc.t1);
            const vec2 p_hat = unit_from_angle(theta);
            const vec2 q_hat = perp(p_hat) * (arc.rotation_sign >= 0 ? 1.0 : -1.0);
            return contact_basis{p_hat, q_hat};
        };

        // Multiplier on the arc, pinned at entry by continuity of the
        // velocity costate's radial component, then integrated forward with
        // the radial optimality equation (which therefore has zero residual
        // by construction; the tangential equation reports the mismatch of
        // the constant-relative-speed specialization).
        const contact_basis b1 = basis_at(arc.t1);
        const vec2 lambda_v_in = -in.control;
        const double mu1 =
            (-a * a / diameter - dot(lead_entry.control, b1.p_hat) - dot(lambda_v_in, b1.p_hat)) / diameter;

        const auto mu_rate = [&](double t, double mu) {
            const contact_basis cb = basis_at(t);
            const vec2 lead_uddot = leader_control_curvature(leader, t, fd_h);
            return (a * a * mu / diameter + std::pow(a, 4) / (8.0 * R * R * R) - dot(lead_uddot, cb.p_hat)) /
                   diameter;
        };

        const int steps = std::max(64, static_cast<int>(std::ceil((arc.t2 - arc.t1) / 1e-3)));
        const double h = (arc.t2 - arc.t1) / steps;
        double mu = mu1;
        double tangential_max = 0.0;
        double radial_max = 0.0;
        std::vector<double> mu_values(static_cast<std::size_t>(steps) + 1);
        mu_values[0] = mu;
        for (int i = 0; i < steps; ++i) {
            const double t = arc.t1 + i * h;
            const double k1 = mu_rate(t, mu);
            const double k2 = mu_rate(t + 0.5 * h, mu + 0.5 * h * k1);
            const double k3 = mu_rate(t + 0.5 * h, mu + 0.5 * h * k2);
            const double k4 = mu_rate(t + h, mu + h * k3);
            mu += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            mu_values[static_cast<std::size_t>(i) + 1] = mu;
        }
        for (int i = 0; i <= steps; ++i) {
            const double t = arc.t1 + i * h;
            const double mu_here = mu_values[static_cast<std::size_t>(i)];
            const double mu_dot = mu_rate(t, mu_here);
            const contact_basis cb = basis_at(t);
            const vec2 lead_uddot = leader_control_curvature(leader, t, fd_h);
            radial_max = std::max(radial_max, std::abs(a * a * mu_here / diameter +
                                                       std::pow(a, 4) / (8.0 * R * R * R) -
                                                       diameter * mu_dot - dot(lead_uddot, cb.p_hat)));
            tangential_max = std::max(tangential_max, std::abs(a * mu_dot + dot(lead_uddot, cb.q_hat)));
        }
        diag.radial_ode_residual_max = radial_max;
        diag.tangential_ode_residual_max = tangential_max;

        // Arc-side costates from the projected optimality equations.
        const auto arc_costates = [&](double t, double mu_here) {
            const contact_basis cb = basis_at(t);
            const kinematic_state lead_state = leader.eval(t);
            const vec2 lead_udot = leader_control_rate(leader, t, fd_h);
            const double mu_dot = mu_rate(t, mu_here);
            const vec2 lambda_v = cb.p_hat * (-a * a / diameter - diameter * mu_here -
                                              dot(lead_state.control, cb.p_hat)) +
                                  cb.q_hat * (-dot(lead_state.control, cb.q_hat));
            const vec2 lambda_p =
                cb.p_hat * (diameter * mu_dot + dot(lead_udot, cb.p_hat)) +
                cb.q_hat * (dot(lead_udot, cb.q_hat) + std::pow(a, 3) / (4.0 * R * R));
            return std::pair<vec2, vec2>{lambda_p, lambda_v};
        };

        // Entry jump: the prescribed discontinuity is 2*nu1*s on the position
        // costate, nothing on the velocity costate.
        const auto [lambda_p_arc1, lambda_v_arc1] = arc_costates(arc.t1, mu1);
        const vec2 lambda_p_in = before->a;
        diag.costate_jump_residual_t1 = norm(lambda_p_in - lambda_p_arc1 - s1 * (2.0 * diag.nu.x)) +
                                        norm(lambda_v_in - lambda_v_arc1);

        // Hamiltonians either side of t1. The arc-side constraint term
        // s.s_ddot + s_dot.s_dot vanishes on the arc by construction.
        const double h_in = dot(lambda_p_in, in.velocity) - 0.5 * norm_squared(in.control);
        const double h_arc1 = 0.5 * norm_squared(arc_entry.control) + dot(lambda_p_arc1, arc_entry.velocity) +
                              dot(lambda_v_arc1, arc_entry.control);
        const double n1_time_partial = -2.0 * dot(s1, lead_entry.velocity);
        diag.hamiltonian_mismatch_t1 = h_in - h_arc1 - diag.nu.x * n1_time_partial;

        // Exit side: state continuity, costate continuity, Hamiltonian match.
        const kinematic_state arc_exit = constrained_arc_eval(arc, leader, arc.t2);
        const kinematic_state out_state = eval_trajectory(*after, arc.t2);
        diag.position_residual_t2 = norm(out_state.position - arc_exit.position);
        diag.velocity_residual_t2 = norm(out_state.velocity - arc_exit.velocity);

        const auto [lambda_p_arc2, lambda_v_arc2] = arc_costates(arc.t2, mu_values.back());
        const vec2 lambda_p_out = after->a;
        const vec2 lambda_v_out = -out_state.control;
        diag.costate_continuity_residual_t2 =
            norm(lambda_p_arc2 - lambda_p_out) + norm(lambda_v_arc2 - lambda_v_out);

        const double h_arc2 = 0.5 * norm_squared(arc_exit.control) + dot(lambda_p_arc2, arc_exit.velocity) +
                              dot(lambda_v_arc2, arc_exit.control);
        const double h_out = dot(lambda_p_out, out_state.velocity) - 0.5 * norm_squared(out_state.control);
        diag.hamiltonian_mismatch_t2 = h_arc2 - h_out;

        out.push_back(diag);
    }
    return out;
}

}  // namespace swarm
