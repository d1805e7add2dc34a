#include <swarm/goals.hpp>

namespace swarm {

kinematic_state goal_state(const goal_motion& motion, double t) {
    kinematic_state s;
    s.position = motion.base_offset + motion.formation_velocity * t;
    s.velocity = motion.formation_velocity;
    s.control = {0.0, 0.0};
    if (motion.periodic_frequency != 0.0) {
        const double w = motion.periodic_frequency;
        s.position += motion.periodic_amplitude * (std::sin(w * t) / w);
        s.velocity += motion.periodic_amplitude * std::cos(w * t);
        s.control += motion.periodic_amplitude * (-w * std::sin(w * t));
    }
    return s;
}

}  // namespace swarm
