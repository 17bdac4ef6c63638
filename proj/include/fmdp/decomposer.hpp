#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fmdp/mission_model.hpp"

namespace fmdp {

enum class SubKind { goal, location, fault, mixed };
enum class Criterion { goal, location, fault };

std::string to_string(SubKind k);
std::string to_string(Criterion c);
/// Throws ValidationError for anything but "goal", "location", "fault".
Criterion parse_criterion(const std::string& s);

/// A mission model restricted to a subset of its states. Transitions that
/// would leave the subset keep the vehicle in its current state instead, so
/// rows stay stochastic and the state count equals the member count.
class RestrictedMdp final : public MdpModel {
public:
    RestrictedMdp(std::shared_ptr<const MissionModel> base, std::vector<std::uint64_t> members);

    std::size_t state_count() const override { return members_.size(); }
    std::size_t action_count() const override { return base_->action_count(); }
    double discount() const override { return base_->discount(); }
    double cost(std::size_t s, std::size_t a) const override { return base_->cost(members_[s], a); }
    void successors(std::size_t s, std::size_t a, std::vector<Successor>& out) const override;

    const std::vector<std::uint64_t>& members() const noexcept { return members_; }
    /// Local index of a global state, or nullopt when it is not a member.
    std::optional<std::size_t> local_index(std::uint64_t global) const;
    const MissionModel& base() const noexcept { return *base_; }

private:
    std::shared_ptr<const MissionModel> base_;
    std::vector<std::uint64_t> members_;
    std::vector<std::int32_t> lookup_;  // global -> local or -1
};

struct SubMdp {
    int id = 0;
    SubKind kind = SubKind::goal;
    std::string focus;        // human readable discriminant
    int goal = -1;            // goal kind: 0-based goal index
    std::vector<int> cells;   // location / mixed kinds: cells covered
    std::vector<int> faults;  // fault / mixed kinds: 1-based fault modes covered
    CostForm cost_form = CostForm::local;
    std::shared_ptr<const MdpModel> model;
    /// Goal kind: the single-goal mission model behind `model`.
    std::shared_ptr<const MissionModel> mission;
    /// Restriction kinds: sorted member indices into the global space.
    /// Null for goal kind, whose members are every global state.
    std::shared_ptr<const std::vector<std::uint64_t>> members;
    std::function<bool(const MissionState&)> member;
    /// Local state index of a member global state.
    std::function<std::size_t(const MissionState&, std::uint64_t global_index)> project;

    std::uint64_t state_count() const { return model->state_count(); }
    bool restricted() const noexcept { return members != nullptr; }
};

struct ScoreWeights {
    double goal = 1.0;      // w_g
    double location = 1.0;  // w_l
    double fault = 1.0;     // w_f
};

struct CandidateScore {
    double reward_impact = 0.0;
    double spatial_coherence = 0.0;
    double fault_sensitivity = 0.0;
    double total = 0.0;
};

struct DecomposeOptions {
    /// Cell sets for location partitioning; empty means grid quadrants.
    std::vector<std::vector<int>> regions;
    ScoreWeights weights;
    double merge_threshold = 0.0;
    double overlap_limit = 0.5;        // Jaccard similarity above which the lower-scored candidate goes
    std::uint64_t merge_floor = 32;    // candidates smaller than this may merge without overlapping
};

/// Grid quadrants (halved rows x halved columns), skipping empty ones.
std::vector<std::vector<int>> default_regions(const ModelConfig& cfg);

/// One goal sub-MDP: the single-goal mission model for goal `goal` under the
/// local cost form, with commitment collapsed to {0, this goal}.
SubMdp make_goal_sub(const ModelConfig& global_cfg, int goal);

/// Restriction of the global model to the listed member states.
SubMdp make_restricted_sub(std::shared_ptr<const MissionModel> global, SubKind kind, std::vector<std::uint64_t> members,
                           std::vector<int> cells, std::vector<int> faults, std::string focus);

/// Candidates for one criterion. Candidates over t_max are dropped and a
/// note goes to `diagnostics`; an empty result also adds a warning.
std::vector<SubMdp> partition(const std::shared_ptr<const MissionModel>& model, Criterion criterion,
                              std::uint64_t t_max, const DecomposeOptions& options = {},
                              std::vector<std::string>* diagnostics = nullptr);

CandidateScore score_candidate(const SubMdp& c, const ScoreWeights& weights, const ModelConfig& global_cfg);

double jaccard(const SubMdp& a, const SubMdp& b);

/// Mixed candidate over the union of two restriction candidates when the
/// merged score reaches `threshold`. Returns nullopt when the pair does not
/// qualify (no overlap and not both under the floor), the score is short, or
/// the union exceeds t_max (the latter noted in `diagnostics`).
std::optional<SubMdp> merge_candidates(const SubMdp& a, const SubMdp& b, double threshold,
                                       const ScoreWeights& weights, const std::shared_ptr<const MissionModel>& global,
                                       std::uint64_t t_max, std::uint64_t merge_floor = 32,
                                       std::vector<std::string>* diagnostics = nullptr);

struct DecompositionPlan {
    std::shared_ptr<const MissionModel> global;
    std::vector<SubMdp> subs;
    std::vector<CandidateScore> scores;  // parallel to subs
    std::uint64_t t_max = 0;
    ScoreWeights weights;
    std::vector<std::string> diagnostics;

    /// phi: ids of the sub-MDPs containing global state `s`.
    std::vector<int> subs_for(std::uint64_t s) const;
    const SubMdp& sub(int id) const;
};

/// Candidates, scoring, optional mixed merges, overlap pruning and the
/// coverage check. Throws ContractError listing uncovered states if the
/// surviving candidates miss part of the state space, or if none survive.
DecompositionPlan decompose(const std::shared_ptr<const MissionModel>& model, Criterion criterion,
                            std::uint64_t t_max, const DecomposeOptions& options = {});

/// Single goal sub-MDP equal to the (single-goal) global model itself,
/// global cost form included.
DecompositionPlan identity_plan(const std::shared_ptr<const MissionModel>& model);

/// Per-sub kind, focus, state count and score, plus a summary of how many
/// sub-MDPs cover each global state.
nlohmann::json plan_to_json(const DecompositionPlan& plan);
/// Fixed-width table of the same content for terminals.
std::string format_plan(const DecompositionPlan& plan);

/// Local projection of a global mission state onto goal `goal`.
MissionState project_to_goal(const MissionState& s, int goal);

}  // namespace fmdp
