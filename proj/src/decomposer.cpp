#include "fmdp/decomposer.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <cstdio>
#include <sstream>

#include "fmdp/errors.hpp"

namespace fmdp {

std::string to_string(SubKind k) {
    switch (k) {
        case SubKind::goal:
            return "goal";
        case SubKind::location:
            return "location";
        case SubKind::fault:
            return "fault";
        case SubKind::mixed:
            return "mixed";
    }
    return "?";
}

std::string to_string(Criterion c) {
    switch (c) {
        case Criterion::goal:
            return "goal";
        case Criterion::location:
            return "location";
        case Criterion::fault:
            return "fault";
    }
    return "?";
}

Criterion parse_criterion(const std::string& s) {
    if (s == "goal") return Criterion::goal;
    if (s == "location") return Criterion::location;
    if (s == "fault") return Criterion::fault;
    throw ValidationError("criterion", "unknown criterion '" + s + "'");
}

RestrictedMdp::RestrictedMdp(std::shared_ptr<const MissionModel> base, std::vector<std::uint64_t> members)
    : base_(std::move(base)), members_(std::move(members)) {
    if (members_.empty()) throw ContractError("restricted model needs at least one member");
    if (!std::is_sorted(members_.begin(), members_.end())) std::sort(members_.begin(), members_.end());
    lookup_.assign(base_->state_count(), -1);
    for (std::size_t i = 0; i < members_.size(); ++i) {
        if (members_[i] >= base_->state_count()) throw BoundsError("member index out of range");
        lookup_[members_[i]] = static_cast<std::int32_t>(i);
    }
}

std::optional<std::size_t> RestrictedMdp::local_index(std::uint64_t global) const {
    if (global >= lookup_.size() || lookup_[global] < 0) return std::nullopt;
    return static_cast<std::size_t>(lookup_[global]);
}

void RestrictedMdp::successors(std::size_t s, std::size_t a, std::vector<Successor>& out) const {
    std::vector<Successor> raw;
    base_->successors(members_[s], a, raw);
    out.clear();
    double stay = 0.0;
    for (const auto& e : raw) {
        const std::int32_t li = lookup_[e.state];
        if (li < 0 || static_cast<std::size_t>(li) == s) {
            stay += e.probability;
        } else {
            out.push_back({static_cast<std::size_t>(li), e.probability});
        }
    }
    if (stay > 0.0) out.push_back({s, stay});
}

std::vector<std::vector<int>> default_regions(const ModelConfig& cfg) {
    const int rows = cfg.grid_rows;
    const int cols = cfg.grid_cols;
    const int rmid = (rows + 1) / 2;
    const int cmid = (cols + 1) / 2;
    std::vector<std::vector<int>> out;
    for (int qr = 0; qr < 2; ++qr) {
        for (int qc = 0; qc < 2; ++qc) {
            std::vector<int> cells;
            for (int r = qr == 0 ? 0 : rmid; r < (qr == 0 ? rmid : rows); ++r) {
                for (int c = qc == 0 ? 0 : cmid; c < (qc == 0 ? cmid : cols); ++c) cells.push_back(r * cols + c);
            }
            if (!cells.empty()) out.push_back(std::move(cells));
        }
    }
    return out;
}

MissionState project_to_goal(const MissionState& s, int goal) {
    const auto j = static_cast<std::size_t>(goal);
    MissionState out;
    out.fault = s.fault;
    out.range_flags = {s.range_flags.at(j)};
    out.goal_priorities = {s.goal_priorities.at(j)};
    out.location = s.location;
    out.commitment = s.commitment == goal + 1 ? 1 : 0;
    out.threat = s.threat;
    out.nav_mode = s.nav_mode;
    return out;
}

SubMdp make_goal_sub(const ModelConfig& global_cfg, int goal) {
    auto mission = std::make_shared<const MissionModel>(goal_config(global_cfg, goal), CostForm::local);
    SubMdp sub;
    sub.kind = SubKind::goal;
    sub.goal = goal;
    sub.focus = "goal " + std::to_string(goal + 1);
    sub.cost_form = CostForm::local;
    sub.mission = mission;
    sub.model = mission;
    sub.member = [](const MissionState&) { return true; };
    const StateLayout local = mission->layout();
    sub.project = [goal, local](const MissionState& s, std::uint64_t) {
        return static_cast<std::size_t>(encode_state(project_to_goal(s, goal), local).value);
    };
    return sub;
}

SubMdp make_restricted_sub(std::shared_ptr<const MissionModel> global, SubKind kind,
                           std::vector<std::uint64_t> members, std::vector<int> cells, std::vector<int> faults,
                           std::string focus) {
    auto model = std::make_shared<const RestrictedMdp>(global, std::move(members));
    SubMdp sub;
    sub.kind = kind;
    sub.focus = std::move(focus);
    sub.cells = std::move(cells);
    sub.faults = std::move(faults);
    sub.cost_form = CostForm::global;
    sub.model = model;
    sub.members = std::shared_ptr<const std::vector<std::uint64_t>>(model, &model->members());
    const StateLayout layout = global->layout();
    sub.member = [model, layout](const MissionState& s) {
        return model->local_index(encode_state(s, layout).value).has_value();
    };
    sub.project = [model](const MissionState&, std::uint64_t g) {
        auto li = model->local_index(g);
        if (!li) throw ContractError("state is not a member of this sub-MDP");
        return *li;
    };
    return sub;
}

namespace {

std::string cells_label(const std::vector<int>& cells) {
    std::ostringstream os;
    os << "cells {";
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << '}';
    return os.str();
}

// Global indices whose digit at `digit` lies in `allowed`.
std::vector<std::uint64_t> members_where(const MissionModel& m, std::size_t digit, const std::set<int>& allowed) {
    const auto radices = m.layout().radices();
    std::vector<std::uint64_t> out;
    std::vector<std::uint32_t> d;
    for (std::uint64_t s = 0; s < m.state_count(); ++s) {
        decode_digits(s, radices, d);
        if (allowed.count(static_cast<int>(d[digit]))) out.push_back(s);
    }
    return out;
}

std::uint64_t count_where(const MissionModel& m, std::size_t digit, const std::set<int>& allowed) {
    const auto radices = m.layout().radices();
    std::uint64_t per = m.state_count() / radices[digit];
    std::uint64_t hits = 0;
    for (int v : allowed) {
        if (v >= 0 && static_cast<std::uint32_t>(v) < radices[digit]) ++hits;
    }
    return per * hits;
}

double grid_diameter(const std::vector<int>& cells, int cols) {
    int best = 0;
    for (int a : cells) {
        for (int b : cells) best = std::max(best, std::abs(a / cols - b / cols) + std::abs(a % cols - b % cols));
    }
    return best;
}

void note(std::vector<std::string>* diagnostics, std::string msg) {
    if (diagnostics != nullptr) diagnostics->push_back(std::move(msg));
}

}  // namespace

std::vector<SubMdp> partition(const std::shared_ptr<const MissionModel>& model, Criterion criterion,
                              std::uint64_t t_max, const DecomposeOptions& options,
                              std::vector<std::string>* diagnostics) {
    if (t_max == 0) throw ContractError("t_max must be > 0");
    const ModelConfig& cfg = model->config();
    const StateLayout& layout = model->layout();
    std::vector<SubMdp> out;

    switch (criterion) {
        case Criterion::goal: {
            ModelConfig single = goal_config(cfg, 0);
            const auto size = state_count(single.layout);
            for (int j = 0; j < layout.goal_count(); ++j) {
                if (size > t_max) {
                    note(diagnostics, "goal " + std::to_string(j + 1) + ": " + std::to_string(size) +
                                          " states exceed t_max " + std::to_string(t_max));
                    continue;
                }
                out.push_back(make_goal_sub(cfg, j));
            }
            break;
        }
        case Criterion::location: {
            auto regions = options.regions.empty() ? default_regions(cfg) : options.regions;
            for (const auto& region : regions) {
                std::set<int> allowed(region.begin(), region.end());
                for (int c : allowed) {
                    if (c < 0 || c >= layout.location_count()) {
                        throw ValidationError("regions", "cell " + std::to_string(c) + " outside grid");
                    }
                }
                const auto size = count_where(*model, layout.location_digit(), allowed);
                if (size == 0) continue;
                if (size > t_max) {
                    note(diagnostics, cells_label(region) + ": " + std::to_string(size) + " states exceed t_max " +
                                          std::to_string(t_max));
                    continue;
                }
                std::vector<int> cells(allowed.begin(), allowed.end());
                std::vector<int> faults;
                for (int f = 1; f <= layout.fault_count(); ++f) faults.push_back(f);
                out.push_back(make_restricted_sub(model, SubKind::location,
                                                  members_where(*model, layout.location_digit(), allowed), cells,
                                                  faults, cells_label(cells)));
            }
            break;
        }
        case Criterion::fault: {
            for (int f = 1; f <= layout.fault_count(); ++f) {
                std::set<int> allowed{f - 1};
                const auto size = count_where(*model, layout.fault_digit(), allowed);
                if (size > t_max) {
                    note(diagnostics, "fault " + std::to_string(f) + ": " + std::to_string(size) +
                                          " states exceed t_max " + std::to_string(t_max));
                    continue;
                }
                std::vector<int> cells;
                for (int c = 0; c < layout.location_count(); ++c) cells.push_back(c);
                out.push_back(make_restricted_sub(model, SubKind::fault,
                                                  members_where(*model, layout.fault_digit(), allowed), cells, {f},
                                                  "fault " + std::to_string(f)));
            }
            break;
        }
    }
    if (out.empty()) note(diagnostics, "warning: no " + to_string(criterion) + " candidate fits t_max");
    for (std::size_t i = 0; i < out.size(); ++i) out[i].id = static_cast<int>(i) + 1;
    return out;
}

CandidateScore score_candidate(const SubMdp& c, const ScoreWeights& weights, const ModelConfig& global_cfg) {
    CandidateScore sc;
    // Largest goal term over the candidate's states: every priority digit is
    // free inside a candidate, so it is reached with g = 2, r = 1, c = 0.
    if (c.kind == SubKind::goal) {
        sc.reward_impact = 2.0 * global_cfg.goal_weights.at(static_cast<std::size_t>(c.goal));
    } else {
        for (double eta : global_cfg.goal_weights) sc.reward_impact += 2.0 * eta;
    }

    std::vector<int> cells = c.cells;
    if (c.kind == SubKind::goal) {
        for (int l = 0; l < global_cfg.layout.location_count(); ++l) cells.push_back(l);
    }
    sc.spatial_coherence = 1.0 / (1.0 + grid_diameter(cells, global_cfg.grid_cols));

    std::vector<int> faults = c.faults;
    if (c.kind == SubKind::goal) {
        for (int f = 1; f <= global_cfg.layout.fault_count(); ++f) faults.push_back(f);
    }
    double sum = 0.0;
    for (int f : faults) {
        const auto& row = global_cfg.fault_penalties.at(static_cast<std::size_t>(f - 1));
        sum += 0.5 * (row[0] + row[1]);
    }
    sc.fault_sensitivity = faults.empty() ? 0.0 : sum / static_cast<double>(faults.size());
    sc.total = weights.goal * sc.reward_impact + weights.location * sc.spatial_coherence +
               weights.fault * sc.fault_sensitivity;
    return sc;
}

double jaccard(const SubMdp& a, const SubMdp& b) {
    if (!a.restricted() || !b.restricted()) return 0.0;
    const auto& x = *a.members;
    const auto& y = *b.members;
    std::size_t i = 0, j = 0, inter = 0;
    while (i < x.size() && j < y.size()) {
        if (x[i] == y[j]) {
            ++inter;
            ++i;
            ++j;
        } else if (x[i] < y[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    const std::size_t uni = x.size() + y.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::optional<SubMdp> merge_candidates(const SubMdp& a, const SubMdp& b, double threshold,
                                       const ScoreWeights& weights, const std::shared_ptr<const MissionModel>& global,
                                       std::uint64_t t_max, std::uint64_t merge_floor,
                                       std::vector<std::string>* diagnostics) {
    if (!a.restricted() || !b.restricted()) return std::nullopt;
    const bool overlap = jaccard(a, b) > 0.0;
    const bool tiny = a.members->size() < merge_floor && b.members->size() < merge_floor;
    if (!overlap && !tiny) return std::nullopt;

    std::vector<std::uint64_t> uni;
    std::set_union(a.members->begin(), a.members->end(), b.members->begin(), b.members->end(),
                   std::back_inserter(uni));
    if (uni.size() > t_max) {
        note(diagnostics, "merge of '" + a.focus + "' and '" + b.focus + "' rejected: " + std::to_string(uni.size()) +
                              " states exceed t_max " + std::to_string(t_max));
        return std::nullopt;
    }
    std::set<int> cells(a.cells.begin(), a.cells.end());
    cells.insert(b.cells.begin(), b.cells.end());
    std::set<int> faults(a.faults.begin(), a.faults.end());
    faults.insert(b.faults.begin(), b.faults.end());
    SubMdp merged = make_restricted_sub(global, SubKind::mixed, std::move(uni),
                                        std::vector<int>(cells.begin(), cells.end()),
                                        std::vector<int>(faults.begin(), faults.end()),
                                        "mixed(" + a.focus + " + " + b.focus + ")");
    if (score_candidate(merged, weights, global->config()).total < threshold) return std::nullopt;
    return merged;
}

std::vector<int> DecompositionPlan::subs_for(std::uint64_t s) const {
    std::vector<int> ids;
    for (const auto& sub : subs) {
        if (!sub.restricted() || std::binary_search(sub.members->begin(), sub.members->end(), s)) {
            ids.push_back(sub.id);
        }
    }
    return ids;
}

const SubMdp& DecompositionPlan::sub(int id) const {
    for (const auto& s : subs) {
        if (s.id == id) return s;
    }
    throw ContractError("no sub-MDP with id " + std::to_string(id));
}

DecompositionPlan decompose(const std::shared_ptr<const MissionModel>& model, Criterion criterion,
                            std::uint64_t t_max, const DecomposeOptions& options) {
    DecompositionPlan plan;
    plan.global = model;
    plan.t_max = t_max;
    plan.weights = options.weights;

    auto candidates = partition(model, criterion, t_max, options, &plan.diagnostics);
    std::vector<CandidateScore> scores;
    for (const auto& c : candidates) scores.push_back(score_candidate(c, options.weights, model->config()));

    // Mixed step over pairs of the original candidates.
    const std::size_t base_count = candidates.size();
    for (std::size_t i = 0; i < base_count; ++i) {
        for (std::size_t j = i + 1; j < base_count; ++j) {
            auto merged = merge_candidates(candidates[i], candidates[j], options.merge_threshold, options.weights,
                                           model, t_max, options.merge_floor, &plan.diagnostics);
            if (merged) {
                scores.push_back(score_candidate(*merged, options.weights, model->config()));
                candidates.push_back(std::move(*merged));
            }
        }
    }

    // Overlap pruning: visit by descending score (stable on generation
    // order), keep a candidate unless it overlaps a kept one too much.
    std::vector<std::size_t> order(candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return scores[x].total > scores[y].total; });
    std::vector<std::size_t> kept;
    for (std::size_t idx : order) {
        bool ok = true;
        for (std::size_t k : kept) {
            if (jaccard(candidates[idx], candidates[k]) > options.overlap_limit) {
                plan.diagnostics.push_back("pruned '" + candidates[idx].focus + "': overlaps '" + candidates[k].focus +
                                           "'");
                ok = false;
                break;
            }
        }
        if (ok) kept.push_back(idx);
    }
    std::sort(kept.begin(), kept.end(), [&](std::size_t x, std::size_t y) {
        if (candidates[x].kind != candidates[y].kind) return candidates[x].kind < candidates[y].kind;
        return x < y;
    });
    for (std::size_t k : kept) {
        plan.subs.push_back(std::move(candidates[k]));
        plan.scores.push_back(scores[k]);
    }
    for (std::size_t i = 0; i < plan.subs.size(); ++i) plan.subs[i].id = static_cast<int>(i) + 1;

    if (plan.subs.empty()) throw ContractError("decomposition produced no sub-MDP within t_max");
    bool all = false;
    for (const auto& s : plan.subs) all = all || !s.restricted();
    if (!all) {
        std::vector<char> covered(model->state_count(), 0);
        for (const auto& s : plan.subs) {
            for (auto g : *s.members) covered[g] = 1;
        }
        std::vector<std::uint64_t> holes;
        for (std::uint64_t s = 0; s < covered.size(); ++s) {
            if (!covered[s]) holes.push_back(s);
        }
        if (!holes.empty()) {
            std::ostringstream os;
            os << holes.size() << " uncovered states:";
            for (std::size_t i = 0; i < std::min<std::size_t>(holes.size(), 10); ++i) {
                os << ' ' << to_string(decode_state(StateIndex{holes[i]}, model->layout()));
            }
            if (holes.size() > 10) os << " ...";
            throw ContractError(os.str());
        }
    }
    return plan;
}

DecompositionPlan identity_plan(const std::shared_ptr<const MissionModel>& model) {
    if (model->goal_count() != 1) throw ContractError("identity plan needs a single-goal model");
    DecompositionPlan plan;
    plan.global = model;
    plan.t_max = model->state_count();
    SubMdp sub;
    sub.id = 1;
    sub.kind = SubKind::goal;
    sub.goal = 0;
    sub.focus = "goal 1 (identity)";
    sub.cost_form = model->cost_form();
    sub.mission = model;
    sub.model = model;
    sub.member = [](const MissionState&) { return true; };
    sub.project = [](const MissionState&, std::uint64_t g) { return static_cast<std::size_t>(g); };
    plan.scores.push_back(score_candidate(sub, plan.weights, model->config()));
    plan.subs.push_back(std::move(sub));
    return plan;
}

nlohmann::json plan_to_json(const DecompositionPlan& plan) {
    nlohmann::json subs = nlohmann::json::array();
    for (std::size_t i = 0; i < plan.subs.size(); ++i) {
        const auto& sub = plan.subs[i];
        const auto& sc = plan.scores[i];
        subs.push_back({{"id", sub.id},
                        {"kind", to_string(sub.kind)},
                        {"focus", sub.focus},
                        {"states", sub.state_count()},
                        {"score",
                         {{"total", sc.total},
                          {"reward_impact", sc.reward_impact},
                          {"spatial_coherence", sc.spatial_coherence},
                          {"fault_sensitivity", sc.fault_sensitivity}}}});
    }
    const std::uint64_t n = plan.global->state_count();
    std::vector<std::uint32_t> cover(n, 0);
    for (const auto& sub : plan.subs) {
        if (!sub.restricted()) {
            for (auto& c : cover) ++c;
        } else {
            for (auto m : *sub.members) ++cover[m];
        }
    }
    std::uint32_t lo = n ? cover[0] : 0;
    std::uint32_t hi = 0;
    double sum = 0.0;
    std::uint64_t overlapped = 0;
    for (auto c : cover) {
        lo = std::min(lo, c);
        hi = std::max(hi, c);
        sum += c;
        overlapped += c > 1 ? 1 : 0;
    }
    return {{"global_states", n},
            {"t_max", plan.t_max},
            {"weights", {{"goal", plan.weights.goal}, {"location", plan.weights.location}, {"fault", plan.weights.fault}}},
            {"subs", subs},
            {"coverage",
             {{"min", lo}, {"max", hi}, {"mean", n ? sum / static_cast<double>(n) : 0.0}, {"multiply_covered", overlapped}}},
            {"diagnostics", plan.diagnostics}};
}

std::string format_plan(const DecompositionPlan& plan) {
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof line, "%-4s %-9s %-28s %10s %10s\n", "id", "kind", "focus", "states", "score");
    os << line;
    for (std::size_t i = 0; i < plan.subs.size(); ++i) {
        const auto& sub = plan.subs[i];
        std::snprintf(line, sizeof line, "%-4d %-9s %-28s %10llu %10.4f\n", sub.id, to_string(sub.kind).c_str(),
                      sub.focus.substr(0, 28).c_str(), static_cast<unsigned long long>(sub.state_count()),
                      plan.scores[i].total);
        os << line;
    }
    for (const auto& d : plan.diagnostics) os << "note: " << d << '\n';
    return os.str();
}

}  // namespace fmdp
