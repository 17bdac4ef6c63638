#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fmdp/cli.hpp"
#include "fmdp/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "uavmdp");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Run r;
    r.code = fmdp::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string fresh_dir(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("uavmdp_cli_" + name);
    fs::remove_all(p);
    return p.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("version and usage errors") {
        const auto v = run({"--version"});
        CHECK(v.code == fmdp::kExitOk);
        CHECK(v.out == std::string(fmdp::kVersion) + "\n");
        CHECK(run({}).code == fmdp::kExitValidation);
        CHECK(run({"frobnicate"}).code == fmdp::kExitValidation);
        CHECK(run({"solve", "--no-such-flag"}).code == fmdp::kExitValidation);
    }

    TEST_CASE("validate a preset and a broken file") {
        const auto dir = fresh_dir("validate");
        CHECK(run({"validate", "--config", "mission1", "--output-dir", dir}).code == fmdp::kExitOk);
        CHECK(fs::exists(fs::path(dir) / "validation.json"));

        const auto bad = fs::path(dir) / "bad.json";
        std::ofstream(bad) << R"({"layout": {"goals": 2}, "discount": 1.5})";
        const auto r = run({"validate", "--config", bad.string(), "--output-dir", dir});
        CHECK(r.code == fmdp::kExitValidation);
        CHECK(r.err.find("layout.goals: unknown field") != std::string::npos);
        CHECK(run({"validate", "--config", "nonexistent_preset", "--output-dir", dir}).code == fmdp::kExitValidation);
    }

    TEST_CASE("solve writes a manifest and reruns identically") {
        const auto a = fresh_dir("solve_a");
        const auto b = fresh_dir("solve_b");
        REQUIRE(run({"solve", "--config", "mission1", "--output-dir", a}).code == fmdp::kExitOk);
        REQUIRE(run({"solve", "--config", "mission1", "--output-dir", b}).code == fmdp::kExitOk);
        for (const char* f : {"policy.txt", "residuals.csv", "config.json"}) {
            CHECK(slurp(fs::path(a) / f) == slurp(fs::path(b) / f));
        }
        const auto m = json::parse(slurp(fs::path(a) / "manifest.json"));
        CHECK(m["verb"] == "solve");
        CHECK(m["version"] == fmdp::kVersion);
        CHECK(m["seed"] == 0);
        CHECK(m["exit_code"] == 0);
        CHECK(m.contains("config_hash"));
        bool listed = false;
        for (const auto& o : m["outputs"]) listed = listed || o["file"] == "policy.txt";
        CHECK(listed);
    }

    TEST_CASE("compare policy files") {
        const auto dir = fresh_dir("compare");
        REQUIRE(run({"solve", "--config", "mission1", "--output-dir", dir}).code == fmdp::kExitOk);
        const auto pa = (fs::path(dir) / "policy.txt").string();
        CHECK(run({"compare", pa, pa, "--config", "mission1", "--require-exact", "--output-dir", dir}).code ==
              fmdp::kExitOk);

        auto pf = fmdp::read_policy_file(pa);
        pf.policy.actions[17] = pf.policy.actions[17] == 1 ? 2 : 1;
        const auto pb = (fs::path(dir) / "flipped.txt").string();
        fmdp::write_policy_file(pb, pf.policy, pf.layout_digits);
        CHECK(run({"compare", pa, pb, "--config", "mission1", "--output-dir", dir}).code == fmdp::kExitOk);
        const auto rep = json::parse(slurp(fs::path(dir) / "compare.json"));
        CHECK(rep["mismatching"] == 1);
        CHECK(run({"compare", pa, pb, "--config", "mission1", "--require-exact", "--output-dir", dir}).code ==
              fmdp::kExitCheckFailed);
        // Layout mismatch against the three-goal preset.
        CHECK(run({"compare", pa, pa, "--config", "mission3", "--output-dir", dir}).code == fmdp::kExitContract);
    }

    TEST_CASE("decompose and recombine") {
        const auto dir = fresh_dir("decomp");
        const auto d = run({"decompose", "--config", "mission3", "--criterion", "goal", "--output-dir", dir});
        CHECK(d.code == fmdp::kExitOk);
        const auto plan = json::parse(slurp(fs::path(dir) / "plan.json"));
        CHECK(plan["subs"].size() == 3);
        CHECK(run({"decompose", "--criterion", "colour", "--output-dir", dir}).code != fmdp::kExitOk);
        CHECK(run({"recombine", "--config", "mission1", "--output-dir", dir}).code == fmdp::kExitOk);
        CHECK(fs::exists(fs::path(dir) / "combined_policy.txt"));
    }

    TEST_CASE("verify on random products") {
        const auto dir = fresh_dir("verify");
        const auto r = run({"verify", "--mode", "product", "--factors", "2", "--count", "3", "--seed", "4",
                            "--require-exact", "--output-dir", dir});
        CHECK(r.code == fmdp::kExitOk);
        const auto v = json::parse(slurp(fs::path(dir) / "verify.json"));
        CHECK(v.dump().find("100") != std::string::npos);
    }

    TEST_CASE("simulate the duty cycle") {
        const auto dir = fresh_dir("simulate");
        REQUIRE(run({"simulate", "--config", "dutycycle", "--output-dir", dir}).code == fmdp::kExitOk);
        const auto csv = slurp(fs::path(dir) / "trajectory.csv");
        CHECK(csv.find("3,1,1,2,1,0,0,0,2,22,\"set_goal_priority(1,2)\"") != std::string::npos);
        const auto again = fresh_dir("simulate2");
        REQUIRE(run({"simulate", "--config", "dutycycle", "--output-dir", again}).code == fmdp::kExitOk);
        CHECK(slurp(fs::path(again) / "trajectory.csv") == csv);
    }

    TEST_CASE("bench counts only") {
        const auto dir = fresh_dir("bench");
        CHECK(run({"bench", "--g-min", "1", "--g-max", "4", "--solve-up-to", "0", "--output-dir", dir}).code ==
              fmdp::kExitOk);
        const auto csv = slurp(fs::path(dir) / "sweep.csv");
        CHECK(csv.find("3,331776,") != std::string::npos);
    }
}
