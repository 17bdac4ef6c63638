#include "fmdp/recombiner.hpp"

#include <algorithm>
#include <numeric>

#include "fmdp/errors.hpp"

namespace fmdp {

int map_local_action(int local, int d, int goal_count) {
    if (goal_count < 1) throw ContractError("goal_count must be >= 1");
    if (local < 1 || local > 6) throw ContractError("local action " + std::to_string(local) + " not in [1,6]");
    if (d < 1 || d > goal_count) {
        throw ContractError("goal index " + std::to_string(d) + " not in [1," + std::to_string(goal_count) + "]");
    }
    const int k = goal_count;
    switch (local) {
        case 1:
            return 1;
        case 2:
            return 1 + d;
        case 3:
            return k + 2;
        case 4:
            return k + 2 + d;
        case 5:
            return 2 * k + 3;
        default:
            return 2 * k + 4;
    }
}

int local_action_for(int global, int goal, int goal_count) {
    const ActionSpec a = describe_action(global, goal_count);
    switch (a.kind) {
        case ActionKind::commit:
            if (a.goal == goal) return a.agile ? 4 : 2;
            return a.agile ? 3 : 1;
        case ActionKind::no_commitment:
            return a.agile ? 3 : 1;
        case ActionKind::recharge:
            return 5;
        case ActionKind::repair:
            return 6;
    }
    return 1;
}

double priority_score(const SubMdp& sub, const ModelConfig& cfg, const PriorityParams& params) {
    double reward = 0.0;
    double urgency = 0.0;
    if (sub.kind == SubKind::goal) {
        const auto j = static_cast<std::size_t>(sub.goal);
        reward = 2.0 * cfg.goal_weights.at(j);
        urgency = params.reference ? params.reference->goal_priorities.at(j) : 2.0;
    } else {
        for (double eta : cfg.goal_weights) reward += 2.0 * eta;
        if (params.reference) {
            for (auto g : params.reference->goal_priorities) urgency = std::max(urgency, static_cast<double>(g));
        } else {
            urgency = 2.0;
        }
    }

    std::vector<int> faults = sub.faults;
    if (faults.empty()) {
        for (int f = 1; f <= cfg.layout.fault_count(); ++f) faults.push_back(f);
    }
    double fault = 0.0;
    for (int f : faults) {
        const auto& row = cfg.fault_penalties.at(static_cast<std::size_t>(f - 1));
        fault += 0.5 * (row[0] + row[1]);
    }
    fault /= static_cast<double>(faults.size());
    double threat = 0.0;
    std::size_t cells = 0;
    for (const auto& row : cfg.threat_penalties) {
        for (double p : row) {
            threat += p;
            ++cells;
        }
    }
    if (cells > 0) threat /= static_cast<double>(cells);

    return params.w_reward * reward + params.w_urgency * urgency + params.w_exposure * (fault + threat);
}

namespace {

void rank(std::vector<SubSolution>& sols) {
    std::stable_sort(sols.begin(), sols.end(), [](const SubSolution& a, const SubSolution& b) {
        if (a.priority != b.priority) return a.priority > b.priority;
        return a.sub_id < b.sub_id;
    });
}

SubSolution solve_one(const SubMdp& sub, const ModelConfig& cfg, const SolveOptions& options,
                      const PriorityParams& params) {
    BellmanOperator op(*sub.model);
    SolveResult r = value_iteration(op, options);
    if (!r.report.converged) {
        throw ContractError("sub-MDP " + std::to_string(sub.id) + " (" + sub.focus + ") did not converge in " +
                            std::to_string(options.max_sweeps) + " sweeps");
    }
    SubSolution sol;
    sol.sub_id = sub.id;
    sol.action_count = op.action_count();
    sol.q = q_table(op, r.value);
    sol.policy.actions.resize(op.state_count());
    for (std::size_t s = 0; s < op.state_count(); ++s) {
        const double* row = &sol.q[s * sol.action_count];
        sol.policy.actions[s] = static_cast<int>(std::min_element(row, row + sol.action_count) - row) + 1;
    }
    double sum = 0.0;
    for (double v : r.value.values) sum += -v;
    sol.expected_return = sum / static_cast<double>(r.value.values.size());
    sol.value = std::move(r.value);
    sol.report = std::move(r.report);
    sol.priority = priority_score(sub, cfg, params);
    sol.completion_threshold = params.completion_threshold;
    return sol;
}

// Shared machinery for the meta-policy; built once per plan/solution set.
class MetaEvaluator {
public:
    MetaEvaluator(const DecompositionPlan& plan, const std::vector<SubSolution>& solutions)
        : global_(*plan.global), k_(plan.global->goal_count()) {
        for (const auto& sub : plan.subs) {
            const SubSolution* sol = nullptr;
            for (const auto& s : solutions) {
                if (s.sub_id == sub.id) sol = &s;
            }
            if (sol == nullptr) throw ContractError("no solution for sub-MDP " + std::to_string(sub.id));
            entries_.push_back({&sub, sol});
            if (sub.kind == SubKind::goal) ++goal_subs_;
        }
        for (const auto& e : entries_) {
            if (e.sub->kind == SubKind::goal && e.sub->cost_form == CostForm::local) add_distance_ = true;
        }
        for (const auto& e : entries_) {
            if (e.sub->kind == SubKind::goal) {
                baseline_ = &e;
                break;
            }
        }
    }

    std::size_t size() const { return entries_.size(); }
    int sub_id(std::size_t i) const { return entries_[i].sub->id; }
    double priority(std::size_t i) const { return entries_[i].sol->priority; }

    MetaChoice choose(const MissionState& s, std::uint64_t g, MetaMode mode,
                      const std::vector<char>& eligible) const {
        std::vector<std::size_t> local(entries_.size(), 0);
        std::vector<bool> member(entries_.size(), false);
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const SubMdp& sub = *entries_[i].sub;
            if (sub.restricted()) {
                member[i] = std::binary_search(sub.members->begin(), sub.members->end(), g);
                if (member[i]) local[i] = sub.project(s, g);
            } else {
                member[i] = true;
                local[i] = goal_projection(sub) ? goal_index(s, sub.goal, s.commitment == sub.goal + 1 ? 1 : 0)
                                                : sub.project(s, g);
            }
        }

        if (mode == MetaMode::priority) {
            std::optional<std::size_t> best;
            for (std::size_t i = 0; i < entries_.size(); ++i) {
                if (!eligible[i] || !member[i]) continue;
                if (!best || priority(i) > priority(*best) ||
                    (priority(i) == priority(*best) && sub_id(i) < sub_id(*best))) {
                    best = i;
                }
            }
            if (!best) throw MissionComplete("no eligible sub-MDP: mission complete");
            const int la = entries_[*best].sol->policy.actions[local[*best]];
            return {global_action(*best, la), sub_id(*best), -q(*best, local[*best], la)};
        }

        std::optional<std::size_t> base_local;
        if (baseline_ != nullptr && goal_subs_ > 1) base_local = goal_index(s, -1, 0);

        MetaChoice best;
        bool found = false;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (!eligible[i] || !member[i]) continue;
            const int la = entries_[i].sol->policy.actions[local[i]];
            const int ga = global_action(i, la);
            double score;
            if (entries_[i].sub->kind == SubKind::goal) {
                score = -joint_cost(s, ga, local, member, base_local);
            } else {
                score = -q(i, local[i], la);
            }
            if (!found || score > best.score || (score == best.score && sub_id(i) < best.sub_id)) {
                best = {ga, sub_id(i), score};
                found = true;
            }
        }
        if (!found) throw MissionComplete("no eligible sub-MDP: mission complete");
        return best;
    }

private:
    struct Entry {
        const SubMdp* sub;
        const SubSolution* sol;
    };

    // Goal subs built by make_goal_sub share the global layout apart from
    // the goal digits, so their local index is formed directly.
    bool goal_projection(const SubMdp& sub) const {
        return sub.kind == SubKind::goal && sub.mission != nullptr && sub.mission.get() != &global_;
    }

    // Single-goal index of s for goal `goal`; goal < 0 gives the goal-free
    // baseline state (r = 1, g = 0).
    std::size_t goal_index(const MissionState& s, int goal, int commitment) const {
        const StateLayout& L = global_.layout();
        const auto j = static_cast<std::size_t>(goal < 0 ? 0 : goal);
        std::size_t idx = static_cast<std::size_t>(s.fault - 1);
        idx = idx * 2 + (goal < 0 ? 1u : s.range_flags[j]);
        idx = idx * 3 + (goal < 0 ? 0u : s.goal_priorities[j]);
        idx = idx * static_cast<std::size_t>(L.location_count()) + static_cast<std::size_t>(s.location);
        idx = idx * 2 + static_cast<std::size_t>(commitment);
        idx = idx * static_cast<std::size_t>(L.threat_count()) + static_cast<std::size_t>(s.threat);
        idx = idx * static_cast<std::size_t>(L.mode_count()) + static_cast<std::size_t>(s.nav_mode);
        return idx;
    }

    double q(std::size_t i, std::size_t ls, int la) const {
        const SubSolution& sol = *entries_[i].sol;
        return sol.q[ls * sol.action_count + static_cast<std::size_t>(la - 1)];
    }

    int global_action(std::size_t i, int la) const {
        const SubMdp& sub = *entries_[i].sub;
        if (sub.kind != SubKind::goal) return la;
        return map_local_action(la, sub.goal + 1, k_);
    }

    double joint_cost(const MissionState& s, int ga, const std::vector<std::size_t>& local,
                      const std::vector<bool>& member, const std::optional<std::size_t>& base_local) const {
        double total = 0.0;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const SubMdp& sub = *entries_[i].sub;
            if (sub.kind != SubKind::goal || !member[i]) continue;
            total += q(i, local[i], local_action_for(ga, sub.goal, k_));
        }
        if (base_local) {
            const int lb = local_action_for(ga, -1, k_);
            const std::size_t bi = static_cast<std::size_t>(baseline_ - entries_.data());
            total -= static_cast<double>(goal_subs_ - 1) * q(bi, *base_local, lb);
        }
        if (add_distance_) total += global_.distance_cost(describe_action(ga, k_), s.location);
        return total;
    }

    const MissionModel& global_;
    int k_;
    std::vector<Entry> entries_;
    const Entry* baseline_ = nullptr;
    std::size_t goal_subs_ = 0;
    bool add_distance_ = false;
};

}  // namespace

std::vector<SubSolution> solve_all(const DecompositionPlan& plan, const SolveOptions& options,
                                   const PriorityParams& params, const SolveHook& on_solve) {
    std::vector<SubSolution> out;
    for (const auto& sub : plan.subs) {
        if (on_solve) on_solve(sub);
        out.push_back(solve_one(sub, plan.global->config(), options, params));
    }
    rank(out);
    return out;
}

std::map<int, std::vector<int>> assign_agents(std::vector<Agent>& agents, const std::vector<SubSolution>& ranked,
                                              const std::map<int, std::vector<int>>& preconditions) {
    std::map<int, bool> complete;
    for (const auto& s : ranked) complete[s.sub_id] = s.completion;
    std::map<int, std::vector<int>> queues;
    for (auto& agent : agents) {
        for (const auto& sol : ranked) {
            if (sol.completion) continue;
            bool ready = true;
            auto it = preconditions.find(sol.sub_id);
            if (it != preconditions.end()) {
                for (int pre : it->second) {
                    auto c = complete.find(pre);
                    if (c == complete.end() || !c->second) ready = false;
                }
            }
            if (!ready) continue;
            queues[sol.sub_id].push_back(agent.id);
            agent.assigned_subs.push_back(sol.sub_id);
        }
    }
    return queues;
}

MetaChoice select_by_scores(const std::vector<double>& scores, const std::vector<int>& local_actions,
                            const std::vector<int>& goals, int goal_count) {
    if (scores.empty() || scores.size() != local_actions.size() || scores.size() != goals.size()) {
        throw ContractError("select_by_scores: mismatched or empty inputs");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best]) best = i;
    }
    return {map_local_action(local_actions[best], goals[best], goal_count), static_cast<int>(best) + 1,
            scores[best]};
}

MetaChoice meta_policy_action(const MissionState& s, const DecompositionPlan& plan,
                              const std::vector<SubSolution>& solutions, MetaMode mode) {
    MetaEvaluator eval(plan, solutions);
    std::vector<char> eligible(eval.size(), 0);
    for (std::size_t i = 0; i < eval.size(); ++i) {
        for (const auto& sol : solutions) {
            if (sol.sub_id == eval.sub_id(i)) eligible[i] = !sol.completion;
        }
    }
    const std::uint64_t g = encode_state(s, plan.global->layout()).value;
    return eval.choose(s, g, mode, eligible);
}

Policy build_combined_policy(const DecompositionPlan& plan, const std::vector<SubSolution>& solutions,
                             MetaMode mode) {
    MetaEvaluator eval(plan, solutions);
    const std::vector<char> eligible(eval.size(), 1);
    const StateLayout layout = plan.global->layout();
    Policy p;
    p.actions.resize(plan.global->state_count());
    const auto n = static_cast<std::int64_t>(p.actions.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto g = static_cast<std::uint64_t>(i);
        p.actions[g] = eval.choose(decode_state(StateIndex{g}, layout), g, mode, eligible).action;
    }
    return p;
}

SubSolution update_progress(SubSolution sol, const std::vector<double>& rewards) {
    if (rewards.empty()) return sol;
    const double total = sol.progress * static_cast<double>(sol.samples) +
                         std::accumulate(rewards.begin(), rewards.end(), 0.0);
    sol.samples += rewards.size();
    sol.progress = total / static_cast<double>(sol.samples);
    if (sol.progress >= sol.completion_threshold) sol.completion = true;
    return sol;
}

std::vector<SubSolution> replan(const DecompositionPlan& plan, std::vector<SubSolution> solutions,
                                const std::vector<int>& changed_subs, const SolveOptions& options,
                                const PriorityParams& params, const SolveHook& on_solve) {
    for (int id : changed_subs) {
        const SubMdp& sub = plan.sub(id);
        auto it = std::find_if(solutions.begin(), solutions.end(),
                               [id](const SubSolution& s) { return s.sub_id == id; });
        if (on_solve) on_solve(sub);
        SubSolution fresh = solve_one(sub, plan.global->config(), options, params);
        if (it == solutions.end()) {
            solutions.push_back(std::move(fresh));
        } else {
            *it = std::move(fresh);
        }
    }
    rank(solutions);
    return solutions;
}

}  // namespace fmdp
