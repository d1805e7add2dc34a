#include <swarm/scenario.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include <swarm/errors.hpp>

namespace swarm {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_real(const std::string& token, int line, const std::string& field) {
    if (token == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    try {
        std::size_t used = 0;
        const double value = std::stod(token, &used);
        if (used != token.size()) {
            throw std::invalid_argument{token};
        }
        return value;
    } catch (const std::exception&) {
        throw parse_error{"line " + std::to_string(line) + ": field '" + field + "': cannot parse '" + token +
                          "' as a number"};
    }
}

long long parse_int(const std::string& token, int line, const std::string& field) {
    try {
        std::size_t used = 0;
        const long long value = std::stoll(token, &used);
        if (used != token.size()) {
            throw std::invalid_argument{token};
        }
        return value;
    } catch (const std::exception&) {
        throw parse_error{"line " + std::to_string(line) + ": field '" + field + "': cannot parse '" + token +
                          "' as an integer"};
    }
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream stream{s};
    std::string token;
    while (stream >> token) {
        out.push_back(token);
    }
    return out;
}

// Shortest representation that round-trips a double exactly.
std::string format_real(double v) {
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
        if (std::stod(buf) == v) {
            break;
        }
    }
    return buf;
}

}  // namespace

scenario_config parse_scenario(std::istream& in) {
    scenario_config config;
    enum class section { none, scenario, agents, goals };
    section current = section::none;

    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line == "[scenario]") {
                current = section::scenario;
            } else if (line == "[agents]") {
                current = section::agents;
            } else if (line == "[goals]") {
                current = section::goals;
            } else {
                throw parse_error{"line " + std::to_string(line_no) + ": unknown section " + line};
            }
            continue;
        }
        switch (current) {
            case section::none:
                throw parse_error{"line " + std::to_string(line_no) + ": content before any section"};
            case section::scenario: {
                const auto eq = line.find('=');
                if (eq == std::string::npos) {
                    throw parse_error{"line " + std::to_string(line_no) + ": expected key = value"};
                }
                const std::string key = trim(line.substr(0, eq));
                const std::string value = trim(line.substr(eq + 1));
                if (key == "agents") {
                    config.agent_count = static_cast<int>(parse_int(value, line_no, key));
                } else if (key == "goals") {
                    config.goal_count = static_cast<int>(parse_int(value, line_no, key));
                } else if (key == "radius") {
                    config.agent_radius = parse_real(value, line_no, key);
                } else if (key == "horizon") {
                    config.sensing_horizon = parse_real(value, line_no, key);
                } else if (key == "extension") {
                    config.deadline_extension = parse_real(value, line_no, key);
                } else if (key == "initial_deadline") {
                    config.initial_deadline = parse_real(value, line_no, key);
                } else if (key == "dt") {
                    config.dt = parse_real(value, line_no, key);
                } else if (key == "seed") {
                    config.seed = static_cast<std::uint64_t>(parse_int(value, line_no, key));
                } else if (key == "min_time") {
                    config.min_time = parse_real(value, line_no, key);
                } else if (key == "max_time") {
                    config.max_time = parse_real(value, line_no, key);
                } else if (key == "formation_lookahead") {
                    config.formation_lookahead = parse_real(value, line_no, key);
                } else if (key == "v_min") {
                    config.motion_bounds.v_min = parse_real(value, line_no, key);
                } else if (key == "v_max") {
                    config.motion_bounds.v_max = parse_real(value, line_no, key);
                } else if (key == "u_min") {
                    config.motion_bounds.u_min = parse_real(value, line_no, key);
                } else if (key == "u_max") {
                    config.motion_bounds.u_max = parse_real(value, line_no, key);
                } else {
                    throw parse_error{"line " + std::to_string(line_no) + ": unknown key '" + key + "'"};
                }
                break;
            }
            case section::agents: {
                const auto tokens = split_ws(line);
                if (tokens.size() != 5) {
                    throw parse_error{"line " + std::to_string(line_no) +
                                      ": agent rows need 5 fields (id x y vx vy)"};
                }
                agent_initial agent;
                agent.id = static_cast<int>(parse_int(tokens[0], line_no, "agent id"));
                agent.state.position = {parse_real(tokens[1], line_no, "x"), parse_real(tokens[2], line_no, "y")};
                agent.state.velocity = {parse_real(tokens[3], line_no, "vx"), parse_real(tokens[4], line_no, "vy")};
                config.agents.push_back(agent);
                break;
            }
            case section::goals: {
                const auto tokens = split_ws(line);
                if (tokens.size() != 8) {
                    throw parse_error{
                        "line " + std::to_string(line_no) +
                        ": goal rows need 8 fields (index base_x base_y form_vx form_vy amp_x amp_y freq)"};
                }
                goal_motion goal;
                goal.goal_index = static_cast<int>(parse_int(tokens[0], line_no, "goal index"));
                goal.base_offset = {parse_real(tokens[1], line_no, "base_x"), parse_real(tokens[2], line_no, "base_y")};
                goal.formation_velocity = {parse_real(tokens[3], line_no, "form_vx"),
                                           parse_real(tokens[4], line_no, "form_vy")};
                goal.periodic_amplitude = {parse_real(tokens[5], line_no, "amp_x"),
                                           parse_real(tokens[6], line_no, "amp_y")};
                goal.periodic_frequency = parse_real(tokens[7], line_no, "freq");
                config.goals.push_back(goal);
                break;
            }
        }
    }

    // Counts may be omitted and inferred from the row lists.
    if (config.agent_count == 0) {
        config.agent_count = static_cast<int>(config.agents.size());
    }
    if (config.goal_count == 0) {
        config.goal_count = static_cast<int>(config.goals.size());
    }
    validate_scenario(config);
    return config;
}

scenario_config load_scenario(const std::string& path) {
    std::ifstream in{path};
    if (!in) {
        throw parse_error{"cannot open scenario file: " + path};
    }
    return parse_scenario(in);
}

std::string save_scenario(const scenario_config& config) {
    std::ostringstream out;
    out << "[scenario]\n";
    out << "agents = " << config.agent_count << "\n";
    out << "goals = " << config.goal_count << "\n";
    out << "radius = " << format_real(config.agent_radius) << "\n";
    out << "horizon = " << format_real(config.sensing_horizon) << "\n";
    out << "extension = " << format_real(config.deadline_extension) << "\n";
    out << "initial_deadline = " << format_real(config.initial_deadline) << "\n";
    out << "dt = " << format_real(config.dt) << "\n";
    out << "seed = " << config.seed << "\n";
    out << "min_time = " << format_real(config.min_time) << "\n";
    out << "max_time = " << format_real(config.max_time) << "\n";
    out << "formation_lookahead = " << format_real(config.formation_lookahead) << "\n";
    out << "v_min = " << format_real(config.motion_bounds.v_min) << "\n";
    out << "v_max = " << format_real(config.motion_bounds.v_max) << "\n";
    out << "u_min = " << format_real(config.motion_bounds.u_min) << "\n";
    out << "u_max = " << format_real(config.motion_bounds.u_max) << "\n";
    out << "\n[agents]\n";
    for (const auto& agent : config.agents) {
        out << agent.id << " " << format_real(agent.state.position.x) << " " << format_real(agent.state.position.y)
            << " " << format_real(agent.state.velocity.x) << " " << format_real(agent.state.velocity.y) << "\n";
    }
    out << "\n[goals]\n";
    for (const auto& goal : config.goals) {
        out << goal.goal_index << " " << format_real(goal.base_offset.x) << " " << format_real(goal.base_offset.y)
            << " " << format_real(goal.formation_velocity.x) << " " << format_real(goal.formation_velocity.y) << " "
            << format_real(goal.periodic_amplitude.x) << " " << format_real(goal.periodic_amplitude.y) << " "
            << format_real(goal.periodic_frequency) << "\n";
    }
    return out.str();
}

}  // namespace swarm
