#include "fmdp/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "fmdp/bench.hpp"
#include "fmdp/config_io.hpp"
#include "fmdp/decomposer.hpp"
#include "fmdp/errors.hpp"
#include "fmdp/mission_model.hpp"
#include "fmdp/recombiner.hpp"
#include "fmdp/simulator.hpp"
#include "fmdp/solver.hpp"
#include "fmdp/util.hpp"
#include "fmdp/verifier.hpp"

namespace fmdp {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Common {
    std::string config = "mission3";
    std::uint64_t seed = 0;
    int threads = 0;
    std::string output_dir;
};

/// Collects output files and writes manifest.json at the end of a verb.
class RunContext {
public:
    RunContext(std::string verb, const Common& common, std::vector<std::string> argv)
        : verb_(std::move(verb)), common_(common), argv_(std::move(argv)) {
        dir_ = common.output_dir;
        fs::create_directories(dir_);
    }

    std::string path(const std::string& name) const { return (fs::path(dir_) / name).string(); }

    void write_text(const std::string& name, const std::string& text) {
        std::ofstream f(path(name), std::ios::binary);
        if (!f) throw ContractError("cannot write " + path(name));
        f << text;
        outputs_.push_back(name);
    }
    void write_json(const std::string& name, const json& doc) { write_text(name, doc.dump(2) + "\n"); }
    void add(const std::string& name) { outputs_.push_back(name); }

    void set_config(const ModelConfig& cfg) {
        config_hash_ = hex64(config_hash(cfg));
        write_json("config.json", config_to_json(cfg));
    }
    const std::string& config_hash_hex() const { return config_hash_; }
    json& extra() { return extra_; }

    void finish(int exit_code) {
        json files = json::array();
        for (const auto& name : outputs_) files.push_back({{"file", name}, {"fnv1a64", hex64(hash_file(path(name)))}});
        json m{{"tool", "uavmdp"},
               {"version", kVersion},
               {"verb", verb_},
               {"argv", argv_},
               {"config", common_.config},
               {"seed", common_.seed},
               {"rng", kRngName},
               {"threads", omp_get_max_threads()},
               {"exit_code", exit_code},
               {"outputs", files}};
        if (!config_hash_.empty()) m["config_hash"] = config_hash_;
        if (!extra_.is_null()) m["parameters"] = extra_;
        std::ofstream f(path("manifest.json"), std::ios::binary);
        f << m.dump(2) << "\n";
    }

private:
    std::string verb_;
    Common common_;
    std::vector<std::string> argv_;
    std::string dir_;
    std::vector<std::string> outputs_;
    std::string config_hash_;
    json extra_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string policy_text(const Policy& p, const StateLayout& layout) {
    std::ostringstream os;
    write_policy(os, p, layout.radices());
    return os.str();
}

MetaMode parse_meta_mode(const std::string& s) {
    if (s == "best_value") return MetaMode::best_value;
    if (s == "priority") return MetaMode::priority;
    throw ValidationError("--meta", "expected best_value or priority, got '" + s + "'");
}

struct Args {
    Common common;
    // solve
    double tol = 1e-6;
    int max_sweeps = 10000;
    // decompose / recombine
    std::string criterion = "goal";
    std::uint64_t t_max = 0;
    std::string meta = "best_value";
    // verify
    std::string mode = "product";
    int factors = 2;
    std::uint64_t max_states = 8000;
    int count = 1;
    bool require_exact = false;
    // simulate
    std::string scenario = "dutycycle";
    std::string policy_path;
    int horizon = -1;
    // bench
    int g_min = 1;
    int g_max = 10;
    int solve_up_to = 3;
    double budget = 600.0;
    bool with_compare = false;
    // compare
    std::string policy_a;
    std::string policy_b;
    bool tie_aware = false;
};

int cmd_validate(const Args& a, RunContext& ctx, std::ostream& out) {
    const ModelConfig cfg = load_config(a.common.config);
    ctx.set_config(cfg);
    const auto violations = validate_config(cfg);
    if (!violations.empty()) throw ValidationError(violations);
    MissionModel model(cfg);
    const ValidationReport rep = validate_model(model);
    json issues = json::array();
    for (std::size_t i = 0; i < rep.issues.size() && i < 100; ++i) {
        const auto& is = rep.issues[i];
        issues.push_back({{"state", is.state}, {"action", is.action + 1}, {"message", is.problem}});
    }
    ctx.write_json("validation.json", {{"states", model.state_count()},
                                       {"actions", model.action_count()},
                                       {"valid", rep.valid()},
                                       {"issue_count", rep.issues.size()},
                                       {"issues", issues}});
    out << "states " << model.state_count() << ", actions " << model.action_count() << ": "
        << (rep.valid() ? "valid" : std::to_string(rep.issues.size()) + " issues") << "\n";
    return rep.valid() ? kExitOk : kExitValidation;
}

int cmd_solve(const Args& a, RunContext& ctx, std::ostream& out) {
    const ModelConfig cfg = load_config(a.common.config);
    ctx.set_config(cfg);
    MissionModel model(cfg);
    SolveOptions opts{a.tol, a.max_sweeps};
    BellmanOperator op(model);
    const SolveResult r = value_iteration(op, opts);
    const Policy p = extract_policy(op, r.value);
    ctx.write_text("policy.txt", policy_text(p, cfg.layout));
    std::ostringstream csv;
    write_residual_csv(csv, r.report);
    ctx.write_text("residuals.csv", csv.str());
    ctx.write_json("solve.json", {{"states", model.state_count()},
                                  {"sweeps", r.report.iterations},
                                  {"converged", r.report.converged},
                                  {"final_residual", r.report.residual_history.back()},
                                  {"tolerance", a.tol},
                                  {"wall_seconds", r.report.wall_time}});
    out << "solved " << model.state_count() << " states in " << r.report.iterations << " sweeps ("
        << r.report.wall_time << " s), residual " << r.report.residual_history.back() << "\n";
    if (!r.report.converged) {
        throw ContractError("value iteration did not reach tolerance within " + std::to_string(a.max_sweeps) +
                            " sweeps");
    }
    return kExitOk;
}

DecompositionPlan make_plan(const ModelConfig& cfg, const Args& a) {
    auto model = std::make_shared<const MissionModel>(cfg);
    const std::uint64_t t_max = a.t_max ? a.t_max : model->state_count();
    return decompose(model, parse_criterion(a.criterion), t_max);
}

int cmd_decompose(const Args& a, RunContext& ctx, std::ostream& out) {
    const ModelConfig cfg = load_config(a.common.config);
    ctx.set_config(cfg);
    const DecompositionPlan plan = make_plan(cfg, a);
    json doc = plan_to_json(plan);
    doc["criterion"] = a.criterion;
    const auto cr = complexity_reduction(plan, plan.global->state_count());
    doc["complexity"] = {{"global", cr.global_proxy}, {"decomposed", cr.decomposed_proxy}, {"ratio", cr.ratio}};
    ctx.write_json("plan.json", doc);
    out << format_plan(plan);
    return kExitOk;
}

int cmd_recombine(const Args& a, RunContext& ctx, std::ostream& out) {
    const ModelConfig cfg = load_config(a.common.config);
    ctx.set_config(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    const DecompositionPlan plan = make_plan(cfg, a);
    const auto sols = solve_all(plan, SolveOptions{a.tol, a.max_sweeps});
    const Policy combined = build_combined_policy(plan, sols, parse_meta_mode(a.meta));
    const double secs = seconds_since(t0);
    ctx.write_text("combined_policy.txt", policy_text(combined, cfg.layout));
    json subs = json::array();
    for (const auto& s : sols) {
        subs.push_back({{"sub_id", s.sub_id},
                        {"states", s.policy.actions.size()},
                        {"sweeps", s.report.iterations},
                        {"priority", s.priority},
                        {"expected_return", s.expected_return}});
    }
    ctx.write_json("recombine.json", {{"meta", a.meta}, {"criterion", a.criterion}, {"subs", subs},
                                      {"wall_seconds", secs}});
    out << "combined policy over " << combined.actions.size() << " states from " << sols.size() << " sub-MDPs ("
        << secs << " s)\n";
    return kExitOk;
}

int cmd_verify(const Args& a, RunContext& ctx, std::ostream& out) {
    PolicyComparisonReport total;
    total.tie_aware = true;
    if (a.mode == "product") {
        if (a.factors < 1) throw ValidationError("--factors", "must be >= 1");
        if (a.count < 1) throw ValidationError("--count", "must be >= 1");
        RandomMdpSpec spec;
        const auto per = static_cast<std::size_t>(
            std::floor(std::pow(static_cast<double>(a.max_states), 1.0 / a.factors) + 1e-9));
        spec.max_states = std::min<std::size_t>(spec.max_states, per);
        if (spec.max_states < spec.min_states) throw ValidationError("--max-states", "too small for the factor count");
        double worst_dev = 0.0;
        json runs = json::array();
        for (int i = 0; i < a.count; ++i) {
            const std::uint64_t seed = a.common.seed + static_cast<std::uint64_t>(i);
            const ProductMdp prod = random_product(seed, static_cast<std::size_t>(a.factors), spec);
            const auto rep = verify_policy_equivalence(prod, a.tol, a.max_states);
            const double dev = verify_additive_value(prod, a.tol, a.max_states);
            worst_dev = std::max(worst_dev, dev);
            total.total_states += rep.total_states;
            total.matching += rep.matching;
            total.mismatching += rep.mismatching;
            total.exact_matching += rep.exact_matching;
            total.tie_tolerance = rep.tie_tolerance;
            for (const auto& m : rep.mismatch_samples) {
                if (total.mismatch_samples.size() < PolicyComparisonReport::kMaxSamples) {
                    total.mismatch_samples.push_back(m);
                }
            }
            runs.push_back({{"seed", seed}, {"states", rep.total_states}, {"match_percent", rep.match_percent},
                            {"additive_value_deviation", dev}});
        }
        total.seed = a.common.seed;
        total.match_percent =
            total.total_states ? 100.0 * static_cast<double>(total.matching) / static_cast<double>(total.total_states)
                               : 100.0;
        json doc = report_to_json(total);
        doc["mode"] = "product";
        doc["factors"] = a.factors;
        doc["runs"] = runs;
        doc["max_additive_value_deviation"] = worst_dev;
        ctx.write_json("verify.json", doc);
    } else if (a.mode == "mission") {
        const ModelConfig cfg = load_config(a.common.config);
        ctx.set_config(cfg);
        const DecompositionPlan plan = make_plan(cfg, a);
        const auto sols = solve_all(plan, SolveOptions{a.tol, a.max_sweeps});
        const Policy combined = build_combined_policy(plan, sols, parse_meta_mode(a.meta));
        BellmanOperator op(*plan.global);
        const auto g = value_iteration(op, SolveOptions{a.tol, a.max_sweeps});
        const Policy global = extract_policy(op, g.value);
        const auto q = q_table(op, g.value);
        total = compare_policies(combined, global, &q, plan.global->action_count());
        total.assumption_violation = true;  // shared location / commitment digits
        json doc = report_to_json(total);
        doc["mode"] = "mission";
        ctx.write_json("verify.json", doc);
        ctx.write_text("combined_policy.txt", policy_text(combined, cfg.layout));
        ctx.write_text("global_policy.txt", policy_text(global, cfg.layout));
    } else {
        throw ValidationError("--mode", "expected product or mission, got '" + a.mode + "'");
    }
    std::ostringstream csv;
    write_agreement_csv(csv, total);
    ctx.write_text("agreement.csv", csv.str());
    out << "agreement " << total.matching << "/" << total.total_states << " (" << total.match_percent
        << "%), tie-aware\n";
    const bool exact = total.matching == total.total_states;
    if (a.mode == "product" || a.require_exact) return exact ? kExitOk : kExitCheckFailed;
    return kExitOk;
}

int cmd_simulate(const Args& a, RunContext& ctx, std::ostream& out) {
    const ModelConfig cfg = load_config(a.common.config);
    ctx.set_config(cfg);
    MissionModel model(cfg);
    Scenario sc;
    if (a.scenario == "dutycycle") {
        sc = duty_cycle_scenario(cfg);
    } else {
        std::ifstream f(a.scenario);
        if (!f) throw ValidationError(a.scenario, "cannot open scenario");
        json doc;
        try {
            doc = json::parse(f);
        } catch (const json::parse_error& e) {
            throw ValidationError("$", std::string("malformed JSON: ") + e.what());
        }
        sc = scenario_from_json(doc, cfg.layout);
    }
    sc.seed = a.common.seed;
    if (a.horizon >= 0) sc.horizon = a.horizon;
    ctx.write_json("scenario.json", scenario_to_json(sc));

    Policy policy;
    std::string policy_hash;
    if (!a.policy_path.empty()) {
        const PolicyFile pf = read_policy_file(a.policy_path);
        if (pf.layout_digits != cfg.layout.radices()) throw ContractError("policy layout does not match config");
        policy = pf.policy;
        policy_hash = hex64(hash_file(a.policy_path));
    } else {
        BellmanOperator op(model);
        const auto r = value_iteration(op, SolveOptions{a.tol, a.max_sweeps});
        policy = extract_policy(op, r.value);
        ctx.write_text("policy.txt", policy_text(policy, cfg.layout));
        policy_hash = hex64(fnv1a64(policy_text(policy, cfg.layout)));
    }
    const auto traj = run_mission(sc, policy, model);
    std::ostringstream csv;
    write_trajectory_csv(csv, traj, cfg.layout.goal_count(), {sc.seed, ctx.config_hash_hex(), policy_hash});
    ctx.write_text("trajectory.csv", csv.str());
    out << "simulated " << traj.size() << " epochs\n";
    return kExitOk;
}

int cmd_bench(const Args& a, RunContext& ctx, std::ostream& out) {
    SweepOptions so;
    so.budget_seconds = a.budget;
    so.solve = SolveOptions{a.tol, a.max_sweeps};
    std::vector<std::string> diags;
    const StateLayout base = default_config(1).layout;
    const auto points = sweep_goals(a.g_min, a.g_max, a.solve_up_to, base, so, &diags);
    std::ostringstream csv;
    write_sweep_csv(csv, points);
    ctx.write_text("sweep.csv", csv.str());
    json fit_doc;
    try {
        fit_doc = fit_to_json(fit_power_law(points));
    } catch (const ContractError& e) {
        fit_doc = {{"error", e.what()}};
    }
    fit_doc["diagnostics"] = diags;
    fit_doc["threads"] = omp_get_max_threads();
    ctx.write_json("fit.json", fit_doc);
    out << csv.str();
    if (a.with_compare) {
        const ModelConfig cfg = load_config(a.common.config);
        ctx.set_config(cfg);
        const auto rec = compare_global_vs_decomposed(cfg, SolveOptions{a.tol, a.max_sweeps}, parse_meta_mode(a.meta));
        ctx.write_json("comparison.json", comparison_to_json(rec));
        out << "global " << rec.global_seconds << " s, decomposed " << rec.decomposed_seconds << " s, ratio "
            << rec.runtime_ratio << ", memory ratio " << rec.memory_ratio << ", similarity "
            << rec.similarity_percent << "% (raw " << rec.raw_similarity_percent << "%)\n";
    }
    return kExitOk;
}

int cmd_compare(const Args& a, RunContext& ctx, std::ostream& out) {
    const ModelConfig cfg = load_config(a.common.config);
    ctx.set_config(cfg);
    const PolicyFile pa = read_policy_file(a.policy_a);
    const PolicyFile pb = read_policy_file(a.policy_b);
    const auto radices = cfg.layout.radices();
    if (pa.layout_digits != radices || pb.layout_digits != radices) {
        throw ContractError("policy layout does not match the config layout");
    }
    PolicyComparisonReport rep;
    if (a.tie_aware) {
        MissionModel model(cfg);
        BellmanOperator op(model);
        const auto r = value_iteration(op, SolveOptions{a.tol, a.max_sweeps});
        const auto q = q_table(op, r.value);
        rep = compare_policies(pa.policy, pb.policy, &q, model.action_count());
    } else {
        rep = compare_policies(pa.policy, pb.policy);
    }
    ctx.write_json("compare.json", report_to_json(rep));
    std::ostringstream csv;
    write_agreement_csv(csv, rep);
    ctx.write_text("agreement.csv", csv.str());
    out << "match " << rep.matching << "/" << rep.total_states << " (" << rep.match_percent << "%)\n";
    if (a.require_exact && rep.matching != rep.total_states) return kExitCheckFailed;
    return kExitOk;
}

void add_common(CLI::App* sub, Args& a) {
    sub->add_option("--config", a.common.config, "Preset name or JSON config path")->capture_default_str();
    sub->add_option("--seed", a.common.seed, "Seed for every random draw")->capture_default_str();
    sub->add_option("--threads", a.common.threads, "Solver threads (0: host default)");
    sub->add_option("--output-dir", a.common.output_dir, "Directory for outputs");
}

void add_solve_opts(CLI::App* sub, Args& a) {
    sub->add_option("--tol", a.tol, "Sup-norm stopping tolerance")->capture_default_str();
    sub->add_option("--max-sweeps", a.max_sweeps, "Sweep limit")->capture_default_str();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Args a;
    CLI::App app{"Factored mission MDP toolkit"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", kVersion);

    auto* validate = app.add_subcommand("validate", "Check a config and its transition model");
    auto* solve = app.add_subcommand("solve", "Value iteration on the global model");
    auto* decomp = app.add_subcommand("decompose", "Build a decomposition plan");
    auto* recomb = app.add_subcommand("recombine", "Solve sub-MDPs and build the combined policy");
    auto* verify = app.add_subcommand("verify", "Policy equivalence checks");
    auto* simulate = app.add_subcommand("simulate", "Closed-loop rollout with scripted events");
    auto* bench = app.add_subcommand("bench", "Scaling sweep and global-vs-decomposed comparison");
    auto* compare = app.add_subcommand("compare", "Compare two policy files");

    for (auto* s : {validate, solve, decomp, recomb, verify, simulate, bench, compare}) add_common(s, a);
    for (auto* s : {solve, recomb, verify, simulate, bench, compare}) add_solve_opts(s, a);
    for (auto* s : {decomp, recomb, verify}) {
        s->add_option("--criterion", a.criterion, "goal, location or fault")->capture_default_str();
        s->add_option("--t-max", a.t_max, "Largest admissible sub-MDP (0: global size)");
    }
    for (auto* s : {recomb, verify, bench}) {
        s->add_option("--meta", a.meta, "best_value or priority")->capture_default_str();
    }
    verify->add_option("--mode", a.mode, "product or mission")->capture_default_str();
    verify->add_option("--factors", a.factors, "Factors per random product")->capture_default_str();
    verify->add_option("--max-states", a.max_states, "Largest product state count")->capture_default_str();
    verify->add_option("--count", a.count, "Random products, seeds seed..seed+count-1")->capture_default_str();
    verify->add_flag("--require-exact", a.require_exact, "Exit 3 unless agreement is 100%");
    simulate->add_option("--scenario", a.scenario, "dutycycle or a scenario JSON path")->capture_default_str();
    simulate->add_option("--policy", a.policy_path, "Policy file (default: solve the config)");
    simulate->add_option("--horizon", a.horizon, "Override the scenario horizon");
    bench->add_option("--g-min", a.g_min)->capture_default_str();
    bench->add_option("--g-max", a.g_max)->capture_default_str();
    bench->add_option("--solve-up-to", a.solve_up_to, "Largest goal count to time")->capture_default_str();
    bench->add_option("--budget", a.budget, "Solve time budget in seconds")->capture_default_str();
    bench->add_flag("--compare", a.with_compare, "Also run the global vs decomposed comparison on --config");
    compare->add_option("policy_a", a.policy_a, "First policy file")->required();
    compare->add_option("policy_b", a.policy_b, "Second policy file")->required();
    compare->add_flag("--require-exact", a.require_exact, "Exit 3 unless every state matches");
    compare->add_flag("--tie-aware", a.tie_aware, "Count Q-value ties as matches (solves the config)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    CLI::App* verb = app.get_subcommands().front();
    if (a.common.output_dir.empty()) {
        const char* env = std::getenv("UAVMDP_OUTPUT_DIR");
        a.common.output_dir = env && *env ? env : "out";
    }
    if (a.common.threads <= 0) {
        if (const char* env = std::getenv("UAVMDP_THREADS"); env && *env) a.common.threads = std::atoi(env);
    }
    if (a.common.threads > 0) omp_set_num_threads(a.common.threads);

    std::vector<std::string> args(argv + 1, argv + argc);
    int code = kExitOk;
    std::optional<RunContext> ctx;
    try {
        ctx.emplace(verb->get_name(), a.common, args);
        const std::string& name = verb->get_name();
        if (name == "validate") code = cmd_validate(a, *ctx, out);
        else if (name == "solve") code = cmd_solve(a, *ctx, out);
        else if (name == "decompose") code = cmd_decompose(a, *ctx, out);
        else if (name == "recombine") code = cmd_recombine(a, *ctx, out);
        else if (name == "verify") code = cmd_verify(a, *ctx, out);
        else if (name == "simulate") code = cmd_simulate(a, *ctx, out);
        else if (name == "bench") code = cmd_bench(a, *ctx, out);
        else code = cmd_compare(a, *ctx, out);
    } catch (const ValidationError& e) {
        err << "validation failed:\n";
        for (const auto& v : e.violations()) err << "  " << v << "\n";
        code = kExitValidation;
    } catch (const ContractError& e) {
        err << "contract error: " << e.what() << "\n";
        code = kExitContract;
    } catch (const CapacityError& e) {
        err << "capacity error: " << e.what() << "\n";
        code = kExitContract;
    } catch (const BoundsError& e) {
        err << "bounds error: " << e.what() << "\n";
        code = kExitContract;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        code = kExitContract;
    }
    if (ctx) {
        try {
            ctx->finish(code);
        } catch (const std::exception& e) {
            err << "error: cannot write manifest: " << e.what() << "\n";
        }
    }
    return code;
}

}  // namespace fmdp
