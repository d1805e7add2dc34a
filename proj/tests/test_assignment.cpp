#include <doctest.h>

#include <algorithm>
#include <functional>
#include <random>
#include <vector>

#include <swarm/assignment.hpp>
#include <swarm/errors.hpp>

using namespace swarm;

namespace {

cost_matrix make_costs(std::vector<int> ids, int goals, std::vector<double> cells) {
    cost_matrix cm;
    cm.agent_ids = std::move(ids);
    cm.goal_count = goals;
    cm.costs = std::move(cells);
    return cm;
}

// Brute-force oracle: enumerate every injective row->column map over
// feasible cells and return the minimum total cost (infinity if none).
double brute_force_min(const cost_matrix& cm) {
    const std::size_t n = cm.rows();
    std::vector<int> cols(static_cast<std::size_t>(cm.goal_count));
    for (int g = 0; g < cm.goal_count; ++g) {
        cols[static_cast<std::size_t>(g)] = g + 1;
    }
    double best = std::numeric_limits<double>::infinity();
    std::vector<char> used(static_cast<std::size_t>(cm.goal_count), 0);
    const std::function<void(std::size_t, double)> recurse = [&](std::size_t row, double acc) {
        if (acc >= best) {
            return;
        }
        if (row == n) {
            best = acc;
            return;
        }
        for (int g = 1; g <= cm.goal_count; ++g) {
            if (used[static_cast<std::size_t>(g - 1)] || cm.is_infeasible(row, g)) {
                continue;
            }
            used[static_cast<std::size_t>(g - 1)] = 1;
            recurse(row + 1, acc + cm.at(row, g));
            used[static_cast<std::size_t>(g - 1)] = 0;
        }
    };
    recurse(0, 0.0);
    return best;
}

goal_motion static_goal(int index, double x, double y) {
    goal_motion g;
    g.goal_index = index;
    g.base_offset = {x, y};
    return g;
}

neighbor_snapshot snap(int id, vec2 pos, double deadline, std::set<int> banned = {}) {
    neighbor_snapshot s;
    s.id = id;
    s.state = {pos, {0.0, 0.0}};
    s.deadline = deadline;
    s.banned_goals = std::move(banned);
    return s;
}

// A consistent world of resting agents on a line with static goals; views
// follow the symmetric distance-h membership rule.
std::vector<agent_view> line_world(const std::vector<double>& agent_x,
                                   const std::vector<double>& deadlines,
                                   double h,
                                   double now) {
    std::vector<agent_view> views;
    for (std::size_t i = 0; i < agent_x.size(); ++i) {
        agent_view view;
        view.id = static_cast<int>(i) + 1;
        view.now = now;
        view.state = {{agent_x[i], 0.0}, {0.0, 0.0}};
        view.deadline = deadlines[i];
        std::vector<int> members;
        for (std::size_t j = 0; j < agent_x.size(); ++j) {
            if (std::abs(agent_x[j] - agent_x[i]) <= h) {
                members.push_back(static_cast<int>(j) + 1);
            }
        }
        for (const int id : members) {
            auto member = snap(id, {agent_x[static_cast<std::size_t>(id - 1)], 0.0},
                               deadlines[static_cast<std::size_t>(id - 1)]);
            std::vector<int> their_members;
            for (std::size_t j = 0; j < agent_x.size(); ++j) {
                if (std::abs(agent_x[j] - agent_x[static_cast<std::size_t>(id - 1)]) <= h) {
                    their_members.push_back(static_cast<int>(j) + 1);
                }
            }
            member.neighborhood_size = their_members.size();
            view.neighbors.push_back(std::move(member));
        }
        views.push_back(std::move(view));
    }
    return views;
}

}  // namespace

TEST_CASE("build_cost_matrix fills energies and infeasible cells") {
    const std::vector<goal_motion> goals{static_goal(1, 1.0, 0.0), static_goal(2, 0.0, 0.0)};

    SUBCASE("agent resting on a static goal costs zero there") {
        agent_view view;
        view.id = 1;
        view.now = 0.0;
        view.neighbors.push_back(snap(1, {0.0, 0.0}, 5.0));
        const auto cm = build_cost_matrix(view, goals, 0.0);
        CHECK(cm.at(0, 2) == doctest::Approx(0.0));
        CHECK(cm.at(0, 1) > 0.0);
    }

    SUBCASE("unit displacement over a unit horizon costs 12") {
        agent_view view;
        view.id = 1;
        view.neighbors.push_back(snap(1, {0.0, 0.0}, 1.0));
        const auto cm = build_cost_matrix(view, goals, 0.0);
        CHECK(cm.at(0, 1) == doctest::Approx(12.0).epsilon(1e-12));
    }

    SUBCASE("banned goals become infeasible cells") {
        agent_view view;
        view.id = 1;
        view.neighbors.push_back(snap(1, {0.0, 0.0}, 1.0, {1}));
        const auto cm = build_cost_matrix(view, goals, 0.0);
        CHECK(cm.is_infeasible(0, 1));
        CHECK_FALSE(cm.is_infeasible(0, 2));
    }
}

TEST_CASE("solve_local_assignment matches brute force on the documented cases") {
    SUBCASE("3x3 without bans") {
        const auto cm = make_costs({1, 2, 3}, 3, {1, 2, 3, 2, 4, 6, 3, 6, 9});
        const auto am = solve_local_assignment(cm);
        CHECK(am.assigned_goal_for(1) == 3);
        CHECK(am.assigned_goal_for(2) == 2);
        CHECK(am.assigned_goal_for(3) == 1);
        CHECK(am.total_cost(cm) == doctest::Approx(10.0));
        CHECK(am.total_cost(cm) == doctest::Approx(brute_force_min(cm)));
    }

    SUBCASE("same costs with goal 3 banned for agent 1") {
        const auto cm = make_costs({1, 2, 3}, 3, {1, 2, k_infeasible_cost, 2, 4, 6, 3, 6, 9});
        const auto am = solve_local_assignment(cm);
        CHECK(am.assigned_goal_for(1) == 2);
        CHECK(am.assigned_goal_for(2) == 3);
        CHECK(am.assigned_goal_for(3) == 1);
        CHECK(am.total_cost(cm) == doctest::Approx(11.0));
        CHECK(am.total_cost(cm) == doctest::Approx(brute_force_min(cm)));
    }

    SUBCASE("1x1") {
        const auto cm = make_costs({7}, 1, {5});
        const auto am = solve_local_assignment(cm);
        CHECK(am.assigned_goal_for(7) == 1);
        CHECK(am.total_cost(cm) == doctest::Approx(5.0));
    }

    SUBCASE("matrix invariants hold") {
        const auto cm = make_costs({1, 2}, 3, {5, 1, 2, 2, 1, 5});
        const auto am = solve_local_assignment(cm);
        for (std::size_t row = 0; row < 2; ++row) {
            int row_sum = 0;
            for (int g = 1; g <= 3; ++g) {
                row_sum += am.at(row, g);
            }
            CHECK(row_sum == 1);
        }
        for (int g = 1; g <= 3; ++g) {
            CHECK(am.at(0, g) + am.at(1, g) <= 1);
        }
    }
}

TEST_CASE("solve_local_assignment rejects infeasible instances") {
    SUBCASE("a fully banned row") {
        const auto cm = make_costs({1, 2}, 2, {k_infeasible_cost, k_infeasible_cost, 1, 2});
        CHECK_THROWS_AS(solve_local_assignment(cm), infeasible_assignment);
    }

    SUBCASE("two rows restricted to one shared goal") {
        const auto cm = make_costs({1, 2}, 2, {1, k_infeasible_cost, 2, k_infeasible_cost});
        CHECK_THROWS_AS(solve_local_assignment(cm), infeasible_assignment);
    }

    SUBCASE("more agents than goals") {
        const auto cm = make_costs({1, 2, 3}, 2, {1, 2, 3, 4, 5, 6});
        CHECK_THROWS_AS(solve_local_assignment(cm), infeasible_assignment);
    }
}

TEST_CASE("solver equals brute force on random instances") {
    std::mt19937_64 rng{101};
    std::uniform_int_distribution<int> size{1, 6};
    std::uniform_real_distribution<double> cost{0.0, 10.0};
    std::uniform_int_distribution<int> extra{0, 3};
    std::uniform_real_distribution<double> ban_chance{0.0, 1.0};

    for (int trial = 0; trial < 300; ++trial) {
        const int n = size(rng);
        const int m = n + extra(rng);
        cost_matrix cm;
        for (int i = 0; i < n; ++i) {
            cm.agent_ids.push_back(i + 1);
        }
        cm.goal_count = m;
        for (int i = 0; i < n * m; ++i) {
            cm.costs.push_back(cost(rng));
        }
        // Sparse random bans; skip instances they make infeasible.
        for (auto& c : cm.costs) {
            if (ban_chance(rng) < 0.15) {
                c = k_infeasible_cost;
            }
        }
        const double oracle = brute_force_min(cm);
        if (!std::isfinite(oracle)) {
            CHECK_THROWS_AS(solve_local_assignment(cm), infeasible_assignment);
            continue;
        }
        const auto am = solve_local_assignment(cm);
        CHECK(am.total_cost(cm) == doctest::Approx(oracle).epsilon(1e-12));
    }
}

TEST_CASE("detect_conflicts groups claims by goal") {
    SUBCASE("all distinct") {
        const std::vector<prescribed_goal> claims{{1, 1, 10.0}, {2, 2, 10.0}, {3, 3, 10.0}};
        const auto sets = detect_conflicts(claims);
        REQUIRE(sets.size() == 3);
        for (const auto& cs : sets) {
            CHECK(cs.members.size() == 1);
        }
    }

    SUBCASE("two agents on goal 4") {
        const std::vector<prescribed_goal> claims{{1, 4, 10.0}, {2, 4, 10.0}};
        const auto sets = detect_conflicts(claims);
        REQUIRE(sets.size() == 1);
        CHECK(sets[0].goal_index == 4);
        CHECK(sets[0].members == std::vector<int>{1, 2});
        CHECK(sets[0].anchor == 1);
    }

    SUBCASE("three agents split 2 - 1") {
        const std::vector<prescribed_goal> claims{{3, 1, 10.0}, {1, 1, 10.0}, {2, 2, 10.0}};
        const auto sets = detect_conflicts(claims);
        REQUIRE(sets.size() == 2);
        CHECK(sets[0].goal_index == 1);
        CHECK(sets[0].members == std::vector<int>{1, 3});
        CHECK(sets[1].members == std::vector<int>{2});
    }

    SUBCASE("unassigned members are ignored") {
        const std::vector<prescribed_goal> claims{{1, k_no_goal, 10.0}, {2, 1, 10.0}};
        const auto sets = detect_conflicts(claims);
        REQUIRE(sets.size() == 1);
        CHECK(sets[0].members == std::vector<int>{2});
    }
}

TEST_CASE("resolve_round without conflicts settles in one round") {
    const std::vector<goal_motion> goals{static_goal(1, -1.0, 0.0), static_goal(2, 1.0, 0.0)};
    auto views = line_world({-1.0, 1.0}, {10.0, 10.0}, 100.0, 0.0);
    const auto result = resolve_round(views, goals, 0.0, 10.0, {1, 2});
    CHECK(result.report.rounds == 1);
    CHECK(result.report.bans.empty());
    CHECK(result.prescriptions.at(1) == 1);
    CHECK(result.prescriptions.at(2) == 2);
    CHECK(result.deadlines.at(1) == 10.0);
}

TEST_CASE("two-agent contest bans the lower-priority agent and extends its deadline") {
    // Both rest near goal 1; agent 2 carries the larger neighborhood, built
    // from a third agent only it can see.
    const std::vector<goal_motion> goals{static_goal(1, 0.6, 0.0), static_goal(2, 1.8, 0.0),
                                         static_goal(3, 5.0, 0.0)};
    auto views = line_world({0.0, 1.2, 2.4}, {8.0, 8.0, 8.0}, 1.3, 0.0);
    REQUIRE(views[0].neighbors.size() == 2);
    REQUIRE(views[1].neighbors.size() == 3);
    REQUIRE(views[2].neighbors.size() == 2);

    const auto result = resolve_round(views, goals, 0.0, 10.0, {1, 2, 3});
    // Agent 3's two-member view claims goal 2, which agent 2 (bigger
    // neighborhood) also claims; agent 3 loses and is banned.
    REQUIRE(result.report.bans.size() == 1);
    CHECK(result.report.bans[0].agent_id == 3);
    CHECK(result.report.bans[0].goal_index == 2);
    CHECK(result.report.bans[0].winner_id == 2);
    CHECK(result.deadlines.at(3) == doctest::Approx(10.0));
    CHECK(result.deadlines.at(2) == doctest::Approx(8.0));
    CHECK(result.banned_goals.at(3) == std::set<int>{2});
}

TEST_CASE("chain conflict resolves in two rounds with two bans") {
    // Hand-traced instance: agents at -1.2, 0, 1.2, 2.4 with h = 1.3 see
    // {1,2}, {1,2,3}, {2,3,4}, {3,4}. Goal A sits between agents 1 and 2, so
    // agent 3's view (which lacks agent 1) expects agent 2 on A and claims B;
    // agent 2 wins B on the energy tiebreak, pushing agent 3 onto C, where it
    // outranks agent 4 by neighborhood size.
    const std::vector<goal_motion> goals{static_goal(1, -0.3, 0.0), static_goal(2, 0.8, 0.0),
                                         static_goal(3, 2.0, 0.0), static_goal(4, 2.9, 0.0)};
    auto views = line_world({-1.2, 0.0, 1.2, 2.4}, {8.0, 8.0, 8.0, 8.0}, 1.3, 0.0);
    REQUIRE(views[0].neighbors.size() == 2);
    REQUIRE(views[1].neighbors.size() == 3);
    REQUIRE(views[2].neighbors.size() == 3);
    REQUIRE(views[3].neighbors.size() == 2);

    const auto result = resolve_round(views, goals, 0.0, 10.0, {1, 2, 3, 4});
    CHECK(result.report.rounds == 2);
    REQUIRE(result.report.bans.size() == 2);
    CHECK(result.report.bans[0].agent_id == 3);
    CHECK(result.report.bans[0].goal_index == 2);
    CHECK(result.report.bans[0].round == 1);
    CHECK(result.report.bans[1].agent_id == 4);
    CHECK(result.report.bans[1].goal_index == 3);
    CHECK(result.report.bans[1].round == 2);

    CHECK(result.prescriptions.at(1) == 1);
    CHECK(result.prescriptions.at(2) == 2);
    CHECK(result.prescriptions.at(3) == 3);
    CHECK(result.prescriptions.at(4) == 4);
    CHECK(result.deadlines.at(3) == doctest::Approx(10.0));
    CHECK(result.deadlines.at(4) == doctest::Approx(10.0));

    // Fixed point: claims pairwise distinct inside every neighborhood.
    for (const auto& view : views) {
        std::set<int> seen;
        for (const auto& member : view.neighbors) {
            const int goal = result.prescriptions.at(member.id);
            CHECK(seen.insert(goal).second);
        }
    }
}

TEST_CASE("bans are monotone and banned goals never return") {
    const std::vector<goal_motion> goals{static_goal(1, 0.6, 0.0), static_goal(2, 1.8, 0.0),
                                         static_goal(3, 5.0, 0.0)};
    auto views = line_world({0.0, 1.2, 2.4}, {8.0, 8.0, 8.0}, 1.3, 0.0);
    const auto first = resolve_round(views, goals, 0.0, 10.0, {1, 2, 3});

    // Feed the results back as a later snapshot; bans must survive and the
    // banned goal may not be re-prescribed.
    for (auto& view : views) {
        view.now = 1.0;
        view.prescribed_goal = first.prescriptions.at(view.id);
        view.banned_goals = first.banned_goals.at(view.id);
        view.deadline = first.deadlines.at(view.id);
        for (auto& member : view.neighbors) {
            member.prescribed_goal = first.prescriptions.at(member.id);
            member.banned_goals = first.banned_goals.at(member.id);
            member.deadline = first.deadlines.at(member.id);
        }
    }
    const auto second = resolve_round(views, goals, 1.0, 10.0, {1, 2, 3});
    for (int id = 1; id <= 3; ++id) {
        CHECK(second.banned_goals.at(id).size() >= first.banned_goals.at(id).size());
        for (const int banned : first.banned_goals.at(id)) {
            CHECK(second.banned_goals.at(id).count(banned) == 1);
            CHECK(second.prescriptions.at(id) != banned);
        }
    }
}

TEST_CASE("identical full-visibility views solve to the global brute-force optimum") {
    std::mt19937_64 rng{211};
    std::uniform_int_distribution<int> size{2, 6};
    std::uniform_real_distribution<double> coord{-5.0, 5.0};

    for (int trial = 0; trial < 40; ++trial) {
        const int n = size(rng);
        const int m = n + (trial % 3);
        std::vector<double> agent_x;
        for (int i = 0; i < n; ++i) {
            agent_x.push_back(coord(rng));
        }
        std::vector<goal_motion> goals;
        for (int g = 1; g <= m; ++g) {
            goals.push_back(static_goal(g, coord(rng), coord(rng)));
        }
        auto views = line_world(agent_x, std::vector<double>(static_cast<std::size_t>(n), 7.0),
                                std::numeric_limits<double>::infinity(), 0.0);
        std::set<int> everyone;
        for (int i = 1; i <= n; ++i) {
            everyone.insert(i);
        }
        const auto result = resolve_round(views, goals, 0.0, 10.0, everyone);
        CHECK(result.report.bans.empty());

        const auto cm = build_cost_matrix(views[0], goals, 0.0);
        const auto am = solve_local_assignment(cm);
        double total = 0.0;
        std::set<int> taken;
        for (int id = 1; id <= n; ++id) {
            const int goal = result.prescriptions.at(id);
            CHECK(taken.insert(goal).second);
            CHECK(goal == am.assigned_goal_for(id));
            total += cm.at(static_cast<std::size_t>(id - 1), goal);
        }
        CHECK(total == doctest::Approx(brute_force_min(cm)).epsilon(1e-9));
    }
}
