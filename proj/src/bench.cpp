#include "fmdp/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <ostream>

#include "fmdp/decomposer.hpp"
#include "fmdp/errors.hpp"
#include "fmdp/verifier.hpp"

namespace fmdp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<ScalePoint> sweep_goals(int g_min, int g_max, int solve_up_to, const StateLayout& base_layout,
                                    const SweepOptions& options, std::vector<std::string>* diagnostics) {
    if (g_min < 1) throw ContractError("g_min must be >= 1");
    if (g_max < g_min) throw ContractError("g_max must be >= g_min");
    std::vector<ScalePoint> points;
    double spent = 0.0;
    bool stopped = false;
    for (int g = g_min; g <= g_max; ++g) {
        ScalePoint p;
        p.goals = g;
        p.state_count = state_count_exact(StateLayout::make(base_layout.fault_count(), g, base_layout.location_count(),
                                                            base_layout.threat_count(), base_layout.mode_count()));
        if (g <= solve_up_to && !stopped) {
            ModelConfig cfg = default_config(g);
            cfg.layout = StateLayout::make(base_layout.fault_count(), g, base_layout.location_count(),
                                           base_layout.threat_count(), base_layout.mode_count());
            const int runs = g <= 2 ? std::max(1, options.repeats_small) : 1;
            std::vector<double> times;
            for (int r = 0; r < runs; ++r) {
                const auto t0 = Clock::now();
                MissionModel model(cfg);
                value_iteration(model, options.solve);
                times.push_back(seconds_since(t0));
                spent += times.back();
            }
            p.measured_solve_seconds = median(times);
            p.extrapolated = false;
            if (spent > options.budget_seconds) {
                stopped = true;
                if (diagnostics) {
                    diagnostics->push_back("solve budget of " + std::to_string(options.budget_seconds) +
                                           " s exceeded after g=" + std::to_string(g) + "; later points extrapolated");
                }
            }
        }
        points.push_back(p);
    }

    std::size_t measured = 0;
    for (const auto& p : points) measured += p.extrapolated ? 0 : 1;
    if (measured >= 2) {
        const PowerLawFit fit = fit_power_law(points);
        for (auto& p : points) {
            if (!p.extrapolated) continue;
            const double n = p.state_count.convert_to<double>();
            p.predicted_solve_seconds = fit.coefficient * std::pow(n, fit.exponent);
        }
    }
    return points;
}

PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& n_t) {
    if (n_t.size() < 2) throw ContractError("power-law fit needs at least two measured points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (const auto& [n, t] : n_t) {
        if (!(n > 0.0) || !(t > 0.0)) throw ContractError("power-law fit needs positive sizes and times");
        const double x = std::log(n);
        const double y = std::log(t);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    const double m = static_cast<double>(n_t.size());
    const double vx = sxx - sx * sx / m;
    if (vx <= 0.0) throw ContractError("power-law fit needs at least two distinct sizes");
    const double cov = sxy - sx * sy / m;
    const double vy = syy - sy * sy / m;
    PowerLawFit fit;
    fit.exponent = cov / vx;
    fit.coefficient = std::exp((sy - fit.exponent * sx) / m);
    fit.r_squared = vy <= 0.0 ? 1.0 : std::clamp(cov * cov / (vx * vy), 0.0, 1.0);
    return fit;
}

PowerLawFit fit_power_law(const std::vector<ScalePoint>& points) {
    std::vector<std::pair<double, double>> n_t;
    for (const auto& p : points) {
        if (!p.extrapolated && p.measured_solve_seconds) {
            n_t.emplace_back(p.state_count.convert_to<double>(), *p.measured_solve_seconds);
        }
    }
    return fit_power_law(n_t);
}

ComparisonRecord compare_global_vs_decomposed(const ModelConfig& cfg, const SolveOptions& options, MetaMode mode) {
    ComparisonRecord rec;
    auto model = std::make_shared<const MissionModel>(cfg);
    rec.global_states = model->state_count();

    auto t0 = Clock::now();
    BellmanOperator op(*model);
    SolveResult global = value_iteration(op, options);
    const Policy global_policy = extract_policy(op, global.value);
    rec.global_seconds = seconds_since(t0);
    rec.global_sweeps = global.report.iterations;
    rec.global_memory_bytes = 2 * rec.global_states * sizeof(double) + rec.global_states * sizeof(int) +
                              op.storage_bytes();

    t0 = Clock::now();
    DecompositionPlan plan = decompose(model, Criterion::goal, rec.global_states);
    for (const auto& sub : plan.subs) rec.sub_states.push_back(sub.state_count());
    const std::vector<SubSolution> sols = solve_all(plan, options);
    const Policy combined = build_combined_policy(plan, sols, mode);
    rec.decomposed_seconds = seconds_since(t0);

    // Working set per sub: two value buffers, policy, Q table, cached costs and keys, expectation table.
    std::uint64_t sub_bytes = 0;
    for (const auto& sub : plan.subs) {
        const std::uint64_t n = sub.state_count();
        const std::uint64_t a = sub.model->action_count();
        const std::uint64_t selectors = sub.model->factored() ? sub.model->factored()->selector_count() : 0;
        sub_bytes += 2 * n * sizeof(double) + n * sizeof(int) + n * a * (2 * sizeof(double) + sizeof(std::uint32_t)) +
                     2 * selectors * sizeof(double);
    }
    rec.decomposed_memory_bytes = sub_bytes + rec.global_states * sizeof(int);
    rec.runtime_ratio = rec.decomposed_seconds > 0.0 ? rec.global_seconds / rec.decomposed_seconds : 0.0;
    rec.memory_ratio = static_cast<double>(rec.global_memory_bytes) / static_cast<double>(rec.decomposed_memory_bytes);

    const auto q = q_table(op, global.value);
    const auto report = compare_policies(combined, global_policy, &q, model->action_count(), 1e-9);
    rec.similarity_percent = report.match_percent;
    rec.raw_similarity_percent =
        100.0 * static_cast<double>(report.exact_matching) / static_cast<double>(report.total_states);
    return rec;
}

void write_sweep_csv(std::ostream& os, const std::vector<ScalePoint>& points) {
    os << "goals,states,seconds,extrapolated\n";
    for (const auto& p : points) {
        os << p.goals << ',' << p.state_count.str() << ',';
        if (p.measured_solve_seconds) {
            os << *p.measured_solve_seconds;
        } else if (p.predicted_solve_seconds) {
            os << *p.predicted_solve_seconds;
        }
        os << ',' << (p.extrapolated ? "true" : "false") << '\n';
    }
}

nlohmann::json fit_to_json(const PowerLawFit& fit) {
    return {{"exponent", fit.exponent}, {"coefficient", fit.coefficient}, {"r_squared", fit.r_squared}};
}

nlohmann::json comparison_to_json(const ComparisonRecord& r) {
    return {{"global_states", r.global_states},
            {"sub_states", r.sub_states},
            {"global_seconds", r.global_seconds},
            {"decomposed_seconds", r.decomposed_seconds},
            {"runtime_ratio", r.runtime_ratio},
            {"global_memory_bytes", r.global_memory_bytes},
            {"decomposed_memory_bytes", r.decomposed_memory_bytes},
            {"memory_ratio", r.memory_ratio},
            {"similarity_percent", r.similarity_percent},
            {"raw_similarity_percent", r.raw_similarity_percent},
            {"global_sweeps", r.global_sweeps}};
}

}  // namespace fmdp
