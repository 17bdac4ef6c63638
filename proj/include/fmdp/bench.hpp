#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fmdp/mission_model.hpp"
#include "fmdp/recombiner.hpp"
#include "fmdp/state_space.hpp"

namespace fmdp {

struct ScalePoint {
    int goals = 0;
    BigCount state_count;
    std::optional<double> measured_solve_seconds;
    std::optional<double> predicted_solve_seconds;  // from the fit, extrapolated points only
    bool extrapolated = true;
};

struct PowerLawFit {
    double exponent = 0.0;
    double coefficient = 0.0;
    double r_squared = 0.0;
};

struct SweepOptions {
    int repeats_small = 3;        // median of this many runs for g <= 2
    double budget_seconds = 600;  // stop measuring once the running total passes this
    SolveOptions solve;
};

/// Exact counts for g in [g_min, g_max] on `base_layout`'s other factors;
/// wall-clock value iteration on default_config(g) for g <= solve_up_to;
/// the rest is extrapolated from the fit when two or more points were
/// measured. A blown budget ends measuring early and adds a diagnostic.
std::vector<ScalePoint> sweep_goals(int g_min, int g_max, int solve_up_to, const StateLayout& base_layout,
                                    const SweepOptions& options = {}, std::vector<std::string>* diagnostics = nullptr);

/// Least squares on (log N, log T) over the measured points: T = c * N^e.
/// Throws ContractError with fewer than two measured points.
PowerLawFit fit_power_law(const std::vector<ScalePoint>& points);
PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& n_t);

struct ComparisonRecord {
    std::uint64_t global_states = 0;
    std::vector<std::uint64_t> sub_states;
    double global_seconds = 0.0;
    double decomposed_seconds = 0.0;
    double runtime_ratio = 0.0;
    std::uint64_t global_memory_bytes = 0;
    std::uint64_t decomposed_memory_bytes = 0;
    double memory_ratio = 0.0;
    double similarity_percent = 0.0;      // tie-aware
    double raw_similarity_percent = 0.0;  // action-id equality
    int global_sweeps = 0;
};

/// Global value iteration against goal decomposition + sub solves +
/// best-value recombination on the same config. Memory is an analytic proxy:
/// value/policy arrays plus the solver's backup storage.
ComparisonRecord compare_global_vs_decomposed(const ModelConfig& cfg, const SolveOptions& options = {},
                                              MetaMode mode = MetaMode::best_value);

/// goals,states,seconds,extrapolated
void write_sweep_csv(std::ostream& os, const std::vector<ScalePoint>& points);
nlohmann::json fit_to_json(const PowerLawFit& fit);
nlohmann::json comparison_to_json(const ComparisonRecord& r);

}  // namespace fmdp
