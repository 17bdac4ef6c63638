#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fmdp/decomposer.hpp"
#include "fmdp/solver.hpp"

namespace fmdp {

/// Local (single-goal) action -> global action for goal d (1-based):
/// 1 -> 1, 2 -> 1+d, 3 -> k+2, 4 -> k+2+d, 5 -> 2k+3, 6 -> 2k+4.
/// With three goals that is 1, 1+d, 5, 5+d, 9, 10.
int map_local_action(int local, int d, int goal_count = 3);

/// What a global action means to goal sub `goal` (0-based): committing to
/// another goal looks like "no commitment" in the same mode.
int local_action_for(int global, int goal, int goal_count);

struct PriorityParams {
    double w_reward = 1.0;    // w_r
    double w_urgency = 1.0;   // w_u
    double w_exposure = 1.0;  // w_k
    /// Priority flags are read from this state when set; otherwise the
    /// largest level a sub can hold counts.
    std::optional<MissionState> reference;
    double completion_threshold = 0.0;
};

struct SubSolution {
    int sub_id = 0;
    Policy policy;
    ValueFunction value;
    std::vector<double> q;  // local Q table, s*A + a
    std::size_t action_count = 0;
    SolveReport report;
    double expected_return = 0.0;  // mean of -V over the sub's states
    double priority = 0.0;
    bool completion = false;
    double progress = 0.0;
    double completion_threshold = 0.0;
    std::size_t samples = 0;
};

class MissionComplete : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

double priority_score(const SubMdp& sub, const ModelConfig& global_cfg, const PriorityParams& params);

using SolveHook = std::function<void(const SubMdp&)>;

/// Solves every sub-MDP on its own and returns the solutions ordered by
/// descending priority (ties: lower sub id). Throws ContractError naming the
/// sub if one fails to converge.
std::vector<SubSolution> solve_all(const DecompositionPlan& plan, const SolveOptions& options = {},
                                   const PriorityParams& params = {}, const SolveHook& on_solve = {});

struct Agent {
    int id = 0;
    MissionState state;
    std::vector<int> assigned_subs;
};

/// Queues every agent on every incomplete sub whose preconditions are all
/// complete, scanning the ranked list in order. Returns sub id -> agent ids.
std::map<int, std::vector<int>> assign_agents(std::vector<Agent>& agents, const std::vector<SubSolution>& ranked,
                                              const std::map<int, std::vector<int>>& preconditions = {});

enum class MetaMode { priority, best_value };

struct MetaChoice {
    int action = 0;  // global id
    int sub_id = 0;
    double score = 0.0;  // return-form score of the chosen candidate
};

/// Picks the largest score; ties go to the lower position. `goals` holds
/// the 1-based goal index each candidate's local action is mapped with.
MetaChoice select_by_scores(const std::vector<double>& scores, const std::vector<int>& local_actions,
                            const std::vector<int>& goals, int goal_count);

/// Meta-policy at one global state.
///
/// priority: the highest-priority eligible sub's local action, mapped.
/// best_value: every eligible sub proposes its greedy local action; each
/// proposal is scored by its joint return over all goal subs,
///   -( sum_j Q_j(s_j, lambda_j(a)) - (n-1) B(s, a) + h(a, l) ),
/// where B is the goal-free baseline carrying the shared fault/threat costs
/// once and h is the distance term the local cost omits. Restriction plans
/// score each proposal by its own sub's return.
/// Throws MissionComplete when no sub is eligible.
MetaChoice meta_policy_action(const MissionState& s, const DecompositionPlan& plan,
                              const std::vector<SubSolution>& solutions, MetaMode mode);

/// Meta-policy over every global state, all subs eligible.
Policy build_combined_policy(const DecompositionPlan& plan, const std::vector<SubSolution>& solutions,
                             MetaMode mode = MetaMode::best_value);

/// Folds realized per-epoch rewards into the running mean; completion
/// latches once the mean reaches the threshold.
SubSolution update_progress(SubSolution sol, const std::vector<double>& rewards);

/// Re-scores and re-solves only the listed subs, reuses the rest as they
/// are, then re-sorts by priority.
std::vector<SubSolution> replan(const DecompositionPlan& plan, std::vector<SubSolution> solutions,
                                const std::vector<int>& changed_subs, const SolveOptions& options = {},
                                const PriorityParams& params = {}, const SolveHook& on_solve = {});

}  // namespace fmdp
