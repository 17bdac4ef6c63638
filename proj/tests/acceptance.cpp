// Acceptance runner: one PASS/FAIL line per criterion, exit status 0 only
// when every requested criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "fmdp/bench.hpp"
#include "fmdp/config_io.hpp"
#include "fmdp/decomposer.hpp"
#include "fmdp/recombiner.hpp"
#include "fmdp/simulator.hpp"
#include "fmdp/verifier.hpp"
#include "oracles.hpp"

using namespace fmdp;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Clock {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int digits = 4) {
    std::ostringstream os;
    os.precision(digits);
    os << v;
    return os.str();
}

Outcome state_counts() {
    const Clock clock;
    bool ok = state_count(StateLayout::make(8, 1, 8, 3, 2)) == 4608 &&
              state_count(StateLayout::make(8, 3, 8, 3, 2)) == 331776;
    int mismatched = 0;
    for (int g = 1; g <= 10; ++g) {
        const auto exact = state_count_exact(StateLayout::make(8, g, 8, 3, 2));
        if (exact.str() != oracle::state_count(8, g, 8, 3, 2)) ++mismatched;
    }
    const double t = clock.seconds();
    ok = ok && mismatched == 0 && t < 1.0;
    return {ok, "g=1..10 mismatches=" + std::to_string(mismatched) + " time=" + fmt(t) + "s (limit 1s)"};
}

Outcome solver_oracle() {
    const Clock clock;
    Rng rng(2024);
    double worst = 0.0;
    int off_policy = 0;
    for (int i = 0; i < 100; ++i) {
        const auto S = static_cast<std::size_t>(uniform_int(rng, 1, 6));
        const auto A = static_cast<std::size_t>(uniform_int(rng, 1, 3));
        const auto dense = oracle::random_dense(rng, S, A, 0.9);
        const auto model = TabularMdp::from_dense(dense.prob, dense.cost, dense.gamma);
        const auto r = value_iteration(model, {1e-10, 100000});
        const auto truth = oracle::enumerate_policies(dense, 1e-7);
        for (std::size_t s = 0; s < S; ++s) worst = std::max(worst, std::abs(r.value.values[s] - truth.value[s]));
        const auto p = extract_policy(model, r.value);
        std::vector<std::size_t> zb;
        for (int a : p.actions) zb.push_back(static_cast<std::size_t>(a - 1));
        if (std::find(truth.optimal.begin(), truth.optimal.end(), zb) == truth.optimal.end()) ++off_policy;
    }
    const double t = clock.seconds();
    const bool ok = worst <= 1e-6 && off_policy == 0 && t < 30.0;
    return {ok, "max |V-V*|=" + fmt(worst) + " (tol 1e-6) non-optimal policies=" + std::to_string(off_policy) +
                    " time=" + fmt(t) + "s (limit 30s)"};
}

Outcome product_equivalence() {
    const Clock clock;
    RandomMdpSpec spec;
    spec.max_states = 20;
    double worst_match = 100.0;
    double worst_ratio = 0.0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const std::size_t factors = 2 + seed % 2;
        const auto prod = random_product(seed, factors, spec);
        const auto r = verify_policy_equivalence(prod, 1e-10);
        worst_match = std::min(worst_match, r.match_percent);
        const auto vstar = value_iteration(prod, {1e-10, 100000}).value.values;
        double norm = 0.0;
        for (double v : vstar) norm = std::max(norm, std::abs(v));
        const double dev = verify_additive_value(prod, 1e-10);
        worst_ratio = std::max(worst_ratio, dev / (1e-5 * (1.0 + norm)));
    }
    const double t = clock.seconds();
    const bool ok = worst_match == 100.0 && worst_ratio <= 1.0 && t < 120.0;
    return {ok, "min agreement=" + fmt(worst_match, 6) + "% worst deviation/bound=" + fmt(worst_ratio) +
                    " time=" + fmt(t) + "s (limit 120s)"};
}

const ComparisonRecord& mission_comparison() {
    static const ComparisonRecord r = compare_global_vs_decomposed(default_config(3));
    return r;
}

Outcome mission_agreement() {
    const Clock clock;
    const auto& r = mission_comparison();
    const double t = clock.seconds();
    const bool ok = r.global_states == 331776 && r.similarity_percent >= 99.9 && t < 1800.0;
    return {ok, "tie-aware=" + fmt(r.similarity_percent, 6) + "% (floor 99.9%) raw=" +
                    fmt(r.raw_similarity_percent, 6) + "% states=" + std::to_string(r.global_states) +
                    " time=" + fmt(t) + "s (limit 1800s)"};
}

Outcome speedup() {
    const auto& r = mission_comparison();
    const bool ok = r.decomposed_seconds * 20.0 <= r.global_seconds;
    return {ok, "global=" + fmt(r.global_seconds) + "s decomposed=" + fmt(r.decomposed_seconds) +
                    "s ratio=" + fmt(r.runtime_ratio) + "x (floor 20x)"};
}

Outcome action_table() {
    // Rows: local action 1..6; columns: d = 1..3.
    const int table[6][3] = {{1, 1, 1}, {2, 3, 4}, {5, 5, 5}, {6, 7, 8}, {9, 9, 9}, {10, 10, 10}};
    int wrong = 0;
    for (int a = 1; a <= 6; ++a) {
        for (int d = 1; d <= 3; ++d) {
            if (map_local_action(a, d, 3) != table[a - 1][d - 1]) ++wrong;
        }
    }
    return {wrong == 0, "18 pairs, wrong=" + std::to_string(wrong)};
}

Outcome duty_cycle() {
    const Clock clock;
    const MissionModel model(duty_cycle_config());
    const Policy policy = extract_policy(model, value_iteration(model).value);
    const auto traj = run_mission(duty_cycle_scenario(model.config()), policy, model);
    const int goal_cell = model.config().goal_cells.at(0);
    const int base = model.config().base_cell;

    int raised = -1;
    const std::vector<Milestone> order{
        [](const TrajectoryRecord& r) { return r.state.goal_priorities[0] == 2; },
        [](const TrajectoryRecord& r) { return r.state.commitment == 1; },
        [goal_cell](const TrajectoryRecord& r) { return r.state.location == goal_cell; },
        [](const TrajectoryRecord& r) { return r.state.goal_priorities[0] == 0 && r.state.commitment == 0; },
        [](const TrajectoryRecord& r) { return r.state.threat == 2 && r.state.nav_mode == 1; },
        [](const TrajectoryRecord& r) { return r.state.threat == 0 && r.state.nav_mode == 0; },
    };
    const auto hits = milestone_epochs(traj, order);
    bool ok = hits.size() == order.size();
    if (ok) {
        raised = hits[0];
        ok = hits[1] - raised <= 1 && traj.back().state.location == base;
    }
    const double t = clock.seconds();
    ok = ok && t < 1.0;
    std::string epochs;
    for (int e : hits) epochs += (epochs.empty() ? "" : ",") + std::to_string(e);
    return {ok, "milestone epochs=[" + epochs + "] terminal cell=" + std::to_string(traj.back().state.location) +
                    " time=" + fmt(t) + "s (limit 1s)"};
}

Outcome convergence() {
    const Clock clock;
    const auto sub = make_goal_sub(default_config(3), 0);
    const auto r = value_iteration(*sub.model, {1e-6, 10000});
    const auto& h = r.report.residual_history;
    bool monotone = !h.empty();
    for (std::size_t i = 1; i < h.size(); ++i) monotone = monotone && h[i] < h[i - 1];
    const double last = h.empty() ? INFINITY : h.back();
    const double t = clock.seconds();
    const bool ok = monotone && last < 1e-6 && t < 10.0;
    return {ok, "sweeps=" + std::to_string(h.size()) + " monotone=" + (monotone ? "yes" : "no") +
                    " final residual=" + fmt(last) + " time=" + fmt(t) + "s (limit 10s)"};
}

Outcome invariants(const std::string& unit_tests) {
    if (unit_tests.empty()) return {false, "no --unit-tests binary given"};
    const std::string cmd = "\"" + unit_tests + "\" -ts=properties -nv > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return {rc == 0, "property suite (1000 cases per property) exit=" + std::to_string(rc)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    int only = 0;
    std::string unit_tests;
    app.add_option("--criterion", only, "Run one criterion (1-9); 0 runs all")->check(CLI::Range(0, 9));
    app.add_option("--unit-tests", unit_tests, "Path of the unit test binary (criterion 9)");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"state-count exactness", state_counts},
        {"solver oracle equivalence", solver_oracle},
        {"product policy equivalence", product_equivalence},
        {"three-goal policy agreement", mission_agreement},
        {"decomposition speedup", speedup},
        {"action mapping table", action_table},
        {"duty-cycle milestones", duty_cycle},
        {"single-goal convergence", convergence},
        {"invariant properties", [&] { return invariants(unit_tests); }},
    };

    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int n = static_cast<int>(i) + 1;
        if (only != 0 && only != n) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << "criterion " << n << " " << (o.pass ? "PASS" : "FAIL") << " " << criteria[i].first << ": "
                  << o.detail << std::endl;
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
