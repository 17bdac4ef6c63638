#include <doctest.h>

#include <algorithm>

#include "fmdp/config_io.hpp"
#include "fmdp/errors.hpp"
#include "fmdp/simulator.hpp"
#include "oracles.hpp"

using namespace fmdp;

namespace {

const MissionModel& duty_model() {
    static const MissionModel m(duty_cycle_config());
    return m;
}

const Policy& duty_policy() {
    static const Policy p = extract_policy(duty_model(), value_iteration(duty_model()).value);
    return p;
}

Policy constant(const MissionModel& m, int a) {
    Policy p;
    p.actions.assign(m.state_count(), a);
    return p;
}

}  // namespace

TEST_SUITE("simulator") {
    TEST_CASE("all-identity dynamics hold the state") {
        ModelConfig cfg = duty_cycle_config();
        cfg.threat_kernel = Kernel::identity(3);
        cfg.priority_kernels = {Kernel::identity(3)};
        const MissionModel m(cfg);
        Scenario sc;
        sc.initial = minimal_state(cfg.layout);
        sc.initial.location = cfg.base_cell;
        sc.initial.threat = 1;
        sc.horizon = 15;
        const auto traj = run_mission(sc, constant(m, 1), m);
        REQUIRE(traj.size() == 16);
        for (const auto& r : traj) CHECK(r.state == sc.initial);
    }

    TEST_CASE("commit next to the goal cell arrives in one step") {
        const auto& m = duty_model();
        MissionState s = minimal_state(m.layout());
        s.range_flags = {1};
        s.goal_priorities = {2};
        s.location = 3;
        Rng rng(1);
        for (int i = 0; i < 20; ++i) {
            const auto r = step(s, constant(m, 2), m, rng, std::nullopt);
            CHECK(r.next.location == 5);
            CHECK(r.next.commitment == 1);
        }
    }

    TEST_CASE("events override the state before the decision") {
        const auto& m = duty_model();
        Scenario sc = duty_cycle_scenario(m.config(), 2);
        sc.events = {{0, {Event::Kind::set_threat, 0, 2}}, {1, {Event::Kind::set_fault, 0, 4}}};
        const auto traj = run_mission(sc, constant(m, 1), m);
        CHECK(traj[0].state.threat == 2);
        REQUIRE(traj[0].event_applied.has_value());
        CHECK(traj[0].event_applied->kind == Event::Kind::set_threat);
        CHECK(traj[1].state.fault == 4);
        CHECK_FALSE(traj[2].event_applied.has_value());
    }

    TEST_CASE("duty-cycle rollout reaches its milestones in order") {
        const auto& m = duty_model();
        const auto traj = run_mission(duty_cycle_scenario(m.config()), duty_policy(), m);
        REQUIRE(traj.size() == 13);
        const int goal = m.config().goal_cells[0];
        const int base = m.config().base_cell;
        const std::vector<Milestone> order{
            [](const TrajectoryRecord& r) { return r.state.goal_priorities[0] == 2; },
            [](const TrajectoryRecord& r) { return describe_action(r.action, 1).kind == ActionKind::commit; },
            [goal](const TrajectoryRecord& r) { return r.state.location == goal; },
            [](const TrajectoryRecord& r) { return r.state.threat == 2; },
            [base](const TrajectoryRecord& r) { return r.state.location == base; },
        };
        CHECK(event_order_check(traj, order));
        CHECK(milestone_epochs(traj, order) == std::vector<int>{3, 4, 5, 6, 7});

        auto reversed = order;
        std::reverse(reversed.begin(), reversed.end());
        CHECK_FALSE(event_order_check(traj, reversed));
        CHECK(event_order_check(traj, {}));

        // Idle at base before the tasking arrives.
        for (int e = 0; e < 3; ++e) {
            CHECK(traj[static_cast<std::size_t>(e)].action == 1);
            CHECK(traj[static_cast<std::size_t>(e)].state.location == base);
        }
    }

    TEST_CASE("zero horizon gives one record") {
        const auto& m = duty_model();
        Scenario sc = duty_cycle_scenario(m.config(), 0);
        sc.events.clear();
        const auto traj = run_mission(sc, duty_policy(), m);
        CHECK(traj.size() == 1);
    }

    TEST_CASE("same seed, same trajectory") {
        const MissionModel m(default_config(1));
        const Policy p = extract_policy(m, value_iteration(m).value);
        Scenario sc = duty_cycle_scenario(m.config(), 40, 99);
        const auto a = run_mission(sc, p, m);
        const auto b = run_mission(sc, p, m);
        CHECK(a == b);
        sc.seed = 100;
        CHECK_FALSE(run_mission(sc, p, m) == a);
    }

    TEST_CASE("sampled successors lie in the support") {
        const MissionModel m(default_config(2));
        Rng rng(8);
        Policy p;
        p.actions.resize(m.state_count());
        for (auto& a : p.actions) a = static_cast<int>(uniform_int(rng, 1, 8));
        MissionState s = oracle::random_state(rng, m.layout());
        for (int i = 0; i < 300; ++i) {
            const auto r = step(s, p, m, rng, std::nullopt, i);
            const auto dist = m.transition_distribution(s, r.record.action);
            const bool found = std::any_of(dist.begin(), dist.end(),
                                           [&](const auto& e) { return e.first == r.next && e.second > 0.0; });
            CHECK(found);
            s = r.next;
        }
    }

    TEST_CASE("invalid scenarios are rejected") {
        const auto& m = duty_model();
        Scenario sc = duty_cycle_scenario(m.config(), 12);
        sc.events.push_back({13, {Event::Kind::set_threat, 0, 7}});
        const auto errors = validate_scenario(sc, m.layout());
        CHECK(errors.size() == 2);
        CHECK_THROWS_AS(run_mission(sc, duty_policy(), m), ValidationError);
        Rng rng(1);
        CHECK_THROWS_AS(step(sc.initial, constant(m, 1), m, rng,
                             Event{Event::Kind::set_fault, 0, 9}),
                        ValidationError);
    }

    TEST_CASE("scenario JSON round trip") {
        const auto& m = duty_model();
        const Scenario sc = duty_cycle_scenario(m.config(), 12, 4);
        const auto back = scenario_from_json(scenario_to_json(sc), m.layout());
        CHECK(back.initial == sc.initial);
        CHECK(back.horizon == sc.horizon);
        CHECK(back.seed == sc.seed);
        REQUIRE(back.events.size() == sc.events.size());
        for (std::size_t i = 0; i < sc.events.size(); ++i) {
            CHECK(back.events[i].epoch == sc.events[i].epoch);
            CHECK(back.events[i].event == sc.events[i].event);
        }
        auto bad = scenario_to_json(sc);
        bad["events"][0]["kind"] = "set_weather";
        CHECK_THROWS_AS(scenario_from_json(bad, m.layout()), ValidationError);
    }

    TEST_CASE("trajectory CSV") {
        const auto& m = duty_model();
        Scenario sc = duty_cycle_scenario(m.config(), 1);
        sc.events.clear();
        const auto traj = run_mission(sc, duty_policy(), m);
        std::ostringstream os;
        write_trajectory_csv(os, traj, 1, {0, "abc", "def"});
        const auto text = os.str();
        CHECK(text.find("# seed=0\n") == 0);
        CHECK(text.find("epoch,f,r1,g1,l,c,t,m,action,cost,event\n") != std::string::npos);
        CHECK(std::count(text.begin(), text.end(), '\n') == 7);
    }
}
