#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <swarm/app.hpp>
#include <swarm/errors.hpp>
#include <swarm/scenario.hpp>

using namespace swarm;

namespace {

scenario_config parse_text(const std::string& text) {
    std::istringstream in{text};
    return parse_scenario(in);
}

const char* k_minimal = R"([scenario]
radius = 0.25

[agents]
1 0 0 0 0

[goals]
1 2 0 0 0 0 0 0
)";

}  // namespace

TEST_CASE("minimal scenario parses with defaults applied") {
    const auto cfg = parse_text(k_minimal);
    CHECK(cfg.agent_count == 1);
    CHECK(cfg.goal_count == 1);
    CHECK(cfg.agent_radius == 0.25);
    CHECK(std::isinf(cfg.sensing_horizon));
    CHECK(cfg.dt == 0.01);
    CHECK(cfg.deadline_extension == 10.0);
    CHECK(cfg.initial_deadline == 10.0);
    CHECK(cfg.min_time == 20.0);
    CHECK(cfg.max_time == 60.0);
    CHECK(cfg.agents[0].id == 1);
    CHECK(cfg.goals[0].base_offset == vec2{2.0, 0.0});
}

TEST_CASE("parse errors carry line context") {
    SUBCASE("bad number") {
        const char* text = R"([scenario]
radius = fast
)";
        CHECK_THROWS_AS(parse_text(text), parse_error);
        try {
            parse_text(text);
        } catch (const parse_error& e) {
            CHECK(std::string{e.what()}.find("line 2") != std::string::npos);
            CHECK(std::string{e.what()}.find("radius") != std::string::npos);
        }
    }

    SUBCASE("unknown key") {
        CHECK_THROWS_AS(parse_text("[scenario]\nwarp = 9\n"), parse_error);
    }

    SUBCASE("unknown section") {
        CHECK_THROWS_AS(parse_text("[warp]\n"), parse_error);
    }

    SUBCASE("content before a section") {
        CHECK_THROWS_AS(parse_text("radius = 1\n"), parse_error);
    }

    SUBCASE("wrong agent field count") {
        CHECK_THROWS_AS(parse_text("[agents]\n1 0 0\n"), parse_error);
    }

    SUBCASE("wrong goal field count") {
        CHECK_THROWS_AS(parse_text("[goals]\n1 0 0\n"), parse_error);
    }
}

TEST_CASE("validation failures are reported as such") {
    SUBCASE("N exceeds M") {
        const char* text = R"([scenario]
radius = 0.25

[agents]
1 0 0 0 0
2 5 0 0 0

[goals]
1 2 0 0 0 0 0 0
)";
        CHECK_THROWS_WITH_AS(parse_text(text), "N exceeds M", validation_error);
    }

    SUBCASE("goals packed within 2R") {
        const char* text = R"([scenario]
radius = 0.25

[agents]
1 0 0 0 0

[goals]
1 2 0 0 0 0 0 0
2 2.375 0 0 0 0 0 0
)";
        CHECK_THROWS_AS(parse_text(text), validation_error);
    }
}

TEST_CASE("save/parse round trip reproduces the config exactly") {
    auto cfg = parse_text(k_minimal);
    cfg.sensing_horizon = 1.637;
    cfg.dt = 0.02;
    cfg.seed = 42;
    cfg.motion_bounds.v_max = 3.25;
    cfg.goals[0].formation_velocity = {0.15, 0.35};
    cfg.goals[0].periodic_amplitude = {0.125, 0.0};
    cfg.goals[0].periodic_frequency = 0.75;
    cfg.agents[0].state.velocity = {-0.1, 0.7};
    validate_scenario(cfg);

    const std::string echoed = save_scenario(cfg);
    const auto reparsed = parse_text(echoed);
    CHECK(reparsed == cfg);
    // Idempotent: echo of the echo is byte-identical.
    CHECK(save_scenario(reparsed) == echoed);
}

TEST_CASE("output schemas are frozen") {
    run_artifacts artifacts;
    artifacts.trajectory_log.push_back({0.0, 1, {1.5, 2.5}, {0.1, 0.2}, {0.0, 0.0}, 3});
    const std::string csv = format_trajectory_csv(artifacts);
    CHECK(csv.substr(0, csv.find('\n')) == "t,agent_id,x,y,vx,vy,ux,uy,goal");
    CHECK(csv.find("0,1,1.5,2.5,0.1,0.2,0,0,3") != std::string::npos);

    const std::string table = format_sweep_table({});
    CHECK(table == "h,min_separation,energy,t_f,total_bans\n");

    metrics m;
    const std::string text = format_metrics(m);
    for (const char* key : {"min_separation = ", "total_energy = ", "formation_energy = ", "t_f = ",
                            "total_bans = ", "assignment_rounds = ", "replans = ", "ticks = ",
                            "completed = ", "theorem_bound_ok = "}) {
        CHECK(text.find(key) != std::string::npos);
    }

    std::vector<event> events;
    events.push_back({event::kind::ban, 1.0, 3, 2, 1, 4, 0.0, ""});
    const std::string log = format_events(events);
    CHECK(log.find("event = ban") != std::string::npos);
    CHECK(log.find("agent = 3") != std::string::npos);
    CHECK(log.find("goal = 2") != std::string::npos);
    CHECK(log.find("round = 1") != std::string::npos);
    CHECK(log.find("winner = 4") != std::string::npos);
}

TEST_CASE("run_command writes the four artifacts") {
    const auto cfg = parse_text(k_minimal);
    const auto dir = std::filesystem::temp_directory_path() / "swarm_run_cmd_test";
    std::filesystem::remove_all(dir);

    std::ostringstream diag;
    const int code = run_command(cfg, dir.string(), diag);
    CHECK(code == k_exit_ok);
    for (const char* name : {"trajectory.csv", "metrics.txt", "events.log", "config_echo.txt"}) {
        CHECK(std::filesystem::exists(dir / name));
    }

    // The config echo parses back to the exact config.
    const auto echoed = load_scenario((dir / "config_echo.txt").string());
    CHECK(echoed == cfg);
    std::filesystem::remove_all(dir);
}

TEST_CASE("sweep command emits one deterministic row per horizon") {
    const auto cfg = parse_text(k_minimal);

    SUBCASE("empty list produces the bare header") {
        std::ostringstream out;
        std::ostringstream diag;
        CHECK(sweep_command(cfg, {}, "", out, diag) == k_exit_ok);
        CHECK(out.str() == "h,min_separation,energy,t_f,total_bans\n");
    }

    SUBCASE("duplicate horizons give identical rows") {
        std::ostringstream out;
        std::ostringstream diag;
        const double inf = std::numeric_limits<double>::infinity();
        CHECK(sweep_command(cfg, {inf, inf}, "", out, diag) == k_exit_ok);
        std::istringstream lines{out.str()};
        std::string header;
        std::string row1;
        std::string row2;
        std::getline(lines, header);
        std::getline(lines, row1);
        std::getline(lines, row2);
        CHECK(row1 == row2);
        CHECK(row1.substr(0, 4) == "inf,");
        CHECK(row1.substr(row1.rfind(',') + 1) == "0");  // zero bans
    }

    SUBCASE("invalid horizons become failure rows and the sweep continues") {
        std::ostringstream out;
        std::ostringstream diag;
        CHECK(sweep_command(cfg, {0.1, std::numeric_limits<double>::infinity()}, "", out, diag) == k_exit_ok);
        CHECK(out.str().find("error") != std::string::npos);
        CHECK(out.str().find("inf,") != std::string::npos);
    }
}

TEST_CASE("run_app maps bad input to the parse/validation exit code") {
    const auto dir = std::filesystem::temp_directory_path() / "swarm_run_app_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);

    SUBCASE("missing file") {
        run_options options;
        options.scenario_path = (dir / "missing.txt").string();
        std::ostringstream out;
        std::ostringstream diag;
        CHECK(run_app(options, out, diag) == k_exit_invalid_input);
    }

    SUBCASE("horizon override is validated") {
        const auto path = dir / "ok.txt";
        std::ofstream{path} << k_minimal;
        run_options options;
        options.scenario_path = path.string();
        options.horizon = 0.1;  // below 4R
        std::ostringstream out;
        std::ostringstream diag;
        CHECK(run_app(options, out, diag) == k_exit_invalid_input);
    }

    SUBCASE("good scenario runs end to end") {
        const auto path = dir / "ok.txt";
        std::ofstream{path} << k_minimal;
        run_options options;
        options.scenario_path = path.string();
        options.out_dir = (dir / "out").string();
        std::ostringstream out;
        std::ostringstream diag;
        CHECK(run_app(options, out, diag) == k_exit_ok);
        CHECK(std::filesystem::exists(dir / "out" / "metrics.txt"));
    }

    std::filesystem::remove_all(dir);
}
