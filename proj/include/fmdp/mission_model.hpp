#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fmdp/mdp.hpp"
#include "fmdp/state_space.hpp"

namespace fmdp {

enum class ActionScope { global, local };

/// 1-based action identifier. Global ids for a k-goal mission run
/// 1..2(k+1)+2; local (single-goal) ids run 1..6.
struct ActionId {
    int id = 1;
    ActionScope scope = ActionScope::global;

    friend bool operator==(const ActionId&, const ActionId&) = default;
};

enum class ActionKind { no_commitment, commit, recharge, repair };

/// Decoded meaning of an action id.
struct ActionSpec {
    ActionKind kind = ActionKind::no_commitment;
    int goal = -1;  // 0-based, commit only
    bool agile = false;

    friend bool operator==(const ActionSpec&, const ActionSpec&) = default;
};

/// 2(k+1)+2: no-commitment and commit-to-each-goal in both modes, plus
/// recharge and repair.
int mission_action_count(int goal_count);

/// Ordering: 1 no-commitment, 2..k+1 commit to goal 1..k, k+2 no-commitment
/// agile, k+3..2k+2 commit agile, 2k+3 recharge, 2k+4 repair.
ActionSpec describe_action(int id, int goal_count);
int action_id_of(const ActionSpec& spec, int goal_count);
std::string action_name(int id, int goal_count);

enum class DistanceMetric { manhattan, euclidean };
enum class RangeDynamics { static_until_recharge, decay };
enum class IdleBehavior { return_to_base, hold };
/// `local` drops the distance term h(a,l) and requires a single goal.
enum class CostForm { global, local };

struct FaultKernels {
    Kernel normal;
    Kernel agile;
    Kernel recharge;
    Kernel repair;
};

/// Declarative description of a mission MDP. Matrices are row-major and
/// indexed 0-based (fault mode f is row f-1).
struct ModelConfig {
    StateLayout layout = StateLayout::make(8, 3, 8, 3, 2);
    int grid_rows = 4;
    int grid_cols = 2;
    std::vector<int> goal_cells;
    int base_cell = 1;
    double discount = 0.95;
    std::vector<double> goal_weights;     // eta_j
    std::vector<double> range_penalties;  // delta_j
    /// fault_penalties[f-1][in_range]; in_range is 1 when every goal is in range.
    std::vector<std::array<double, 2>> fault_penalties;
    /// threat_penalties[t][m]
    std::vector<std::vector<double>> threat_penalties;
    DistanceMetric distance_metric = DistanceMetric::manhattan;
    double distance_scale = 1.0;
    FaultKernels fault_kernels;
    std::vector<Kernel> priority_kernels;  // one 3x3 per goal
    Kernel threat_kernel;
    RangeDynamics range_dynamics = RangeDynamics::static_until_recharge;
    double range_decay_probability = 0.0;
    IdleBehavior idle_behavior = IdleBehavior::return_to_base;
};

/// Shipped defaults for a k-goal mission on the 4x2 grid.
ModelConfig default_config(int goal_count = 3);

/// Every violation, each prefixed by its document path.
std::vector<std::string> validate_config(const ModelConfig& cfg);

/// Single-goal configuration for goal `goal` (0-based): keeps that goal's
/// weights, cell and priority kernel and every shared parameter.
ModelConfig goal_config(const ModelConfig& cfg, int goal);

/// Mission cost model with factorized stochastic transitions.
class MissionModel final : public MdpModel {
public:
    /// Throws ValidationError listing every config violation.
    explicit MissionModel(ModelConfig cfg, CostForm form = CostForm::global);

    const ModelConfig& config() const noexcept { return cfg_; }
    const StateLayout& layout() const noexcept { return cfg_.layout; }
    CostForm cost_form() const noexcept { return form_; }
    int goal_count() const noexcept { return cfg_.layout.goal_count(); }

    std::size_t state_count() const override { return states_; }
    std::size_t action_count() const override { return static_cast<std::size_t>(actions_); }
    double discount() const override { return cfg_.discount; }
    double cost(std::size_t s, std::size_t a) const override;
    void successors(std::size_t s, std::size_t a, std::vector<Successor>& out) const override;
    const FactoredDynamics* factored() const override { return &dynamics_; }
    std::uint64_t factored_key(std::size_t s, std::size_t a) const override;

    double cost(const MissionState& s, int action) const;
    std::vector<std::pair<MissionState, double>> transition_distribution(const MissionState& s,
                                                                         int action) const;

    /// Cell reached after one move from `from` toward `to` (row first, then column).
    int step_toward(int from, int to) const;
    double distance(int from, int to) const;
    /// Cell an action heads for; nullopt when it holds position.
    std::optional<int> target_cell(const ActionSpec& spec) const;
    /// h(a, l).
    double distance_cost(const ActionSpec& spec, int location) const;

private:
    struct Plan;  // deterministic part of one transition
    Plan plan(const MissionState& s, int action) const;

    ModelConfig cfg_;
    CostForm form_;
    std::size_t states_;
    int actions_;
    std::vector<std::uint32_t> radices_;
    FactoredDynamics dynamics_;
    std::vector<std::uint64_t> selector_dims_;
};

/// sum_j eta_j g_j r_j (1 - [c=j]) + h(a,l) + f(f,r) + sum_j delta_j g_j (1-r_j) + p(t,m).
double global_cost(const MissionState& s, ActionId a, const ModelConfig& cfg);

/// Single-goal restriction of the global cost without h. Throws ContractError for
/// multi-goal layouts.
double local_cost(const MissionState& s, ActionId a, const ModelConfig& cfg);

/// Per-term breakdown, used by scoring and diagnostics.
struct CostTerms {
    double goal = 0.0;
    double distance = 0.0;
    double fault = 0.0;
    double range = 0.0;
    double threat = 0.0;
    double total() const { return goal + distance + fault + range + threat; }
};
CostTerms cost_terms(const MissionState& s, const ActionSpec& a, const ModelConfig& cfg, bool with_distance);

struct ValidationReport {
    std::vector<ModelIssue> issues;
    bool valid() const { return issues.empty(); }
};

ValidationReport validate_model(const MdpModel& model, double tol = 1e-9);

}  // namespace fmdp
