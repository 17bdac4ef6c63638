#include "fmdp/mission_model.hpp"

#include <cmath>
#include <cstdlib>

#include "fmdp/errors.hpp"

namespace fmdp {

int mission_action_count(int goal_count) { return 2 * (goal_count + 1) + 2; }

ActionSpec describe_action(int id, int goal_count) {
    const int k = goal_count;
    if (id < 1 || id > mission_action_count(k)) {
        throw ContractError("action id " + std::to_string(id) + " not in [1," +
                            std::to_string(mission_action_count(k)) + "]");
    }
    if (id == 1) return {ActionKind::no_commitment, -1, false};
    if (id <= k + 1) return {ActionKind::commit, id - 2, false};
    if (id == k + 2) return {ActionKind::no_commitment, -1, true};
    if (id <= 2 * k + 2) return {ActionKind::commit, id - k - 3, true};
    if (id == 2 * k + 3) return {ActionKind::recharge, -1, false};
    return {ActionKind::repair, -1, false};
}

int action_id_of(const ActionSpec& spec, int goal_count) {
    const int k = goal_count;
    switch (spec.kind) {
        case ActionKind::no_commitment:
            return spec.agile ? k + 2 : 1;
        case ActionKind::commit:
            if (spec.goal < 0 || spec.goal >= k) throw ContractError("commit action with invalid goal");
            return spec.agile ? k + 3 + spec.goal : 2 + spec.goal;
        case ActionKind::recharge:
            return 2 * k + 3;
        case ActionKind::repair:
            return 2 * k + 4;
    }
    throw ContractError("unknown action kind");
}

std::string action_name(int id, int goal_count) {
    const ActionSpec a = describe_action(id, goal_count);
    switch (a.kind) {
        case ActionKind::no_commitment:
            return a.agile ? "no commitment (agile)" : "no commitment";
        case ActionKind::commit:
            return "commit goal " + std::to_string(a.goal + 1) + (a.agile ? " (agile)" : "");
        case ActionKind::recharge:
            return "recharge";
        case ActionKind::repair:
            return "repair";
    }
    return "?";
}

namespace {

Kernel degrade_kernel(int faults, double healthy_stay) {
    // Healthy mode leaks into fault modes with geometrically decreasing
    // likelihood (minor faults more common); faults persist until repaired.
    Kernel k = Kernel::identity(static_cast<std::size_t>(faults));
    if (faults < 2) return k;
    const double leak = 1.0 - healthy_stay;
    double weight_sum = 0.0;
    for (int f = 1; f < faults; ++f) weight_sum += std::pow(0.5, f - 1);
    k.at(0, 0) = healthy_stay;
    for (int f = 1; f < faults; ++f) k.at(0, static_cast<std::size_t>(f)) = leak * std::pow(0.5, f - 1) / weight_sum;
    return k;
}

Kernel repair_kernel(int faults) {
    Kernel k(static_cast<std::size_t>(faults), static_cast<std::size_t>(faults));
    for (std::size_t r = 0; r < k.rows; ++r) k.at(r, 0) = 1.0;
    return k;
}

void check_kernel(const Kernel& k, std::size_t rows, std::size_t cols, const std::string& path,
                  std::vector<std::string>& errors) {
    if (k.rows != rows || k.cols != cols || k.p.size() != rows * cols) {
        errors.push_back(path + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) + " matrix, got " +
                         std::to_string(k.rows) + "x" + std::to_string(k.cols));
        return;
    }
    for (auto r : non_stochastic_rows(k)) {
        double sum = 0.0;
        for (double v : k.row(r)) sum += v;
        errors.push_back(path + "[" + std::to_string(r) + "]: row is not a probability vector (sum " +
                         std::to_string(sum) + ")");
    }
}

void check_nonneg(const std::vector<double>& v, std::size_t expected, const std::string& path,
                  std::vector<std::string>& errors) {
    if (v.size() != expected) {
        errors.push_back(path + ": length " + std::to_string(v.size()) + ", expected " + std::to_string(expected));
        return;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i]) || v[i] < 0.0) {
            errors.push_back(path + "[" + std::to_string(i) + "]: must be finite and >= 0");
        }
    }
}

constexpr std::size_t kFaultClasses = 4;
enum FaultClass : std::size_t { kNormal = 0, kAgile = 1, kRecharge = 2, kRepair = 3 };

}  // namespace

ModelConfig default_config(int goal_count) {
    ModelConfig cfg;
    cfg.layout = StateLayout::make(8, goal_count, 8, 3, 2);
    cfg.grid_rows = 4;
    cfg.grid_cols = 2;
    cfg.base_cell = 1;
    cfg.discount = 0.95;

    const std::vector<int> cells = {5, 6, 2, 7, 4, 0, 3};
    for (int j = 0; j < goal_count; ++j) {
        cfg.goal_cells.push_back(cells[static_cast<std::size_t>(j) % cells.size()]);
        cfg.goal_weights.push_back(10.0 - 2.0 * (j % 4));
        cfg.range_penalties.push_back(15.0 - 2.0 * (j % 4));
        Kernel g(3, 3);
        g.at(0, 0) = 1.0;
        g.at(1, 1) = 0.9;
        g.at(1, 2) = 0.1;
        g.at(2, 2) = 1.0;
        cfg.priority_kernels.push_back(g);
    }

    const std::array<double, 8> severity = {0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 35.0, 50.0};
    for (int f = 0; f < cfg.layout.fault_count(); ++f) {
        const double v = severity[static_cast<std::size_t>(f) % severity.size()];
        cfg.fault_penalties.push_back({v, v});
    }
    cfg.threat_penalties = {{0.0, 5.0}, {10.0, 5.0}, {40.0, 10.0}};

    const int faults = cfg.layout.fault_count();
    cfg.fault_kernels.normal = degrade_kernel(faults, 0.97);
    cfg.fault_kernels.agile = degrade_kernel(faults, 0.94);
    cfg.fault_kernels.recharge = cfg.fault_kernels.normal;
    cfg.fault_kernels.repair = repair_kernel(faults);
    cfg.threat_kernel = Kernel::identity(3);
    return cfg;
}

std::vector<std::string> validate_config(const ModelConfig& cfg) {
    std::vector<std::string> errors;
    const auto& L = cfg.layout;
    const auto k = static_cast<std::size_t>(L.goal_count());
    const auto F = static_cast<std::size_t>(L.fault_count());
    const auto T = static_cast<std::size_t>(L.threat_count());
    const auto M = static_cast<std::size_t>(L.mode_count());

    if (L.mode_count() != 2) errors.push_back("layout.mode_count: mission actions need exactly 2 navigation modes");
    if (cfg.grid_rows < 1 || cfg.grid_cols < 1 || cfg.grid_rows * cfg.grid_cols != L.location_count()) {
        errors.push_back("grid: rows*cols must equal layout.location_count (" + std::to_string(L.location_count()) +
                         ")");
    }
    if (cfg.goal_cells.size() != k) {
        errors.push_back("goal_cells: length " + std::to_string(cfg.goal_cells.size()) + ", expected " +
                         std::to_string(k));
    }
    for (std::size_t j = 0; j < cfg.goal_cells.size(); ++j) {
        if (cfg.goal_cells[j] < 0 || cfg.goal_cells[j] >= L.location_count()) {
            errors.push_back("goal_cells[" + std::to_string(j) + "]: cell outside grid");
        }
    }
    if (cfg.base_cell < 0 || cfg.base_cell >= L.location_count()) errors.push_back("base_cell: cell outside grid");
    if (!(cfg.discount > 0.0 && cfg.discount < 1.0)) errors.push_back("discount: must lie in (0,1)");
    check_nonneg(cfg.goal_weights, k, "goal_weights", errors);
    check_nonneg(cfg.range_penalties, k, "range_penalties", errors);

    if (cfg.fault_penalties.size() != F) {
        errors.push_back("fault_penalties: length " + std::to_string(cfg.fault_penalties.size()) + ", expected " +
                         std::to_string(F));
    } else {
        for (std::size_t f = 0; f < F; ++f) {
            for (std::size_t r = 0; r < 2; ++r) {
                const double v = cfg.fault_penalties[f][r];
                if (!std::isfinite(v) || v < 0.0) {
                    errors.push_back("fault_penalties[" + std::to_string(f) + "][" + std::to_string(r) +
                                     "]: must be finite and >= 0");
                }
            }
        }
    }
    if (cfg.threat_penalties.size() != T) {
        errors.push_back("threat_penalties: length " + std::to_string(cfg.threat_penalties.size()) + ", expected " +
                         std::to_string(T));
    } else {
        for (std::size_t t = 0; t < T; ++t) {
            check_nonneg(cfg.threat_penalties[t], M, "threat_penalties[" + std::to_string(t) + "]", errors);
        }
    }
    if (!std::isfinite(cfg.distance_scale) || cfg.distance_scale < 0.0) {
        errors.push_back("distance_scale: must be finite and >= 0");
    }
    check_kernel(cfg.fault_kernels.normal, F, F, "fault_kernels.normal", errors);
    check_kernel(cfg.fault_kernels.agile, F, F, "fault_kernels.agile", errors);
    check_kernel(cfg.fault_kernels.recharge, F, F, "fault_kernels.recharge", errors);
    check_kernel(cfg.fault_kernels.repair, F, F, "fault_kernels.repair", errors);
    if (cfg.priority_kernels.size() != k) {
        errors.push_back("priority_kernels: length " + std::to_string(cfg.priority_kernels.size()) + ", expected " +
                         std::to_string(k));
    } else {
        for (std::size_t j = 0; j < k; ++j) {
            check_kernel(cfg.priority_kernels[j], 3, 3, "priority_kernels[" + std::to_string(j) + "]", errors);
        }
    }
    check_kernel(cfg.threat_kernel, T, T, "threat_kernel", errors);
    if (!(cfg.range_decay_probability >= 0.0 && cfg.range_decay_probability <= 1.0)) {
        errors.push_back("range_dynamics.decay_probability: must lie in [0,1]");
    }
    return errors;
}

ModelConfig goal_config(const ModelConfig& cfg, int goal) {
    const int k = cfg.layout.goal_count();
    if (goal < 0 || goal >= k) throw ContractError("goal index out of range");
    const auto j = static_cast<std::size_t>(goal);
    ModelConfig out = cfg;
    out.layout = StateLayout::make(cfg.layout.fault_count(), 1, cfg.layout.location_count(),
                                   cfg.layout.threat_count(), cfg.layout.mode_count());
    out.goal_cells = {cfg.goal_cells.at(j)};
    out.goal_weights = {cfg.goal_weights.at(j)};
    out.range_penalties = {cfg.range_penalties.at(j)};
    out.priority_kernels = {cfg.priority_kernels.at(j)};
    return out;
}

CostTerms cost_terms(const MissionState& s, const ActionSpec& a, const ModelConfig& cfg, bool with_distance) {
    CostTerms t;
    const auto k = static_cast<std::size_t>(cfg.layout.goal_count());
    bool all_in_range = true;
    for (std::size_t j = 0; j < k; ++j) {
        const double g = s.goal_priorities[j];
        const double r = s.range_flags[j];
        const double committed = (s.commitment == static_cast<int>(j) + 1) ? 1.0 : 0.0;
        t.goal += cfg.goal_weights[j] * g * r * (1.0 - committed);
        t.range += cfg.range_penalties[j] * g * (1.0 - r);
        if (s.range_flags[j] == 0) all_in_range = false;
    }
    t.fault = cfg.fault_penalties[static_cast<std::size_t>(s.fault - 1)][all_in_range ? 1 : 0];
    t.threat = cfg.threat_penalties[static_cast<std::size_t>(s.threat)][static_cast<std::size_t>(s.nav_mode)];
    if (with_distance) {
        std::optional<int> target;
        switch (a.kind) {
            case ActionKind::commit:
                target = cfg.goal_cells[static_cast<std::size_t>(a.goal)];
                break;
            case ActionKind::recharge:
            case ActionKind::repair:
                target = cfg.base_cell;
                break;
            case ActionKind::no_commitment:
                break;
        }
        if (target) {
            const int dr = std::abs(s.location / cfg.grid_cols - *target / cfg.grid_cols);
            const int dc = std::abs(s.location % cfg.grid_cols - *target % cfg.grid_cols);
            const double d = cfg.distance_metric == DistanceMetric::manhattan
                                 ? static_cast<double>(dr + dc)
                                 : std::sqrt(static_cast<double>(dr * dr + dc * dc));
            t.distance = cfg.distance_scale * d;
        }
    }
    return t;
}

double global_cost(const MissionState& s, ActionId a, const ModelConfig& cfg) {
    return cost_terms(s, describe_action(a.id, cfg.layout.goal_count()), cfg, true).total();
}

double local_cost(const MissionState& s, ActionId a, const ModelConfig& cfg) {
    if (cfg.layout.goal_count() != 1) throw ContractError("local_cost requires a single-goal layout");
    return cost_terms(s, describe_action(a.id, 1), cfg, false).total();
}

struct MissionModel::Plan {
    int next_location = 0;
    int next_commitment = 0;
    int next_mode = 0;
    std::size_t fault_row = 0;
    // static mode: next flag value; decay mode: kernel row (0 -> 0, 1 -> 1, 2 -> decays)
    std::vector<std::uint32_t> range_sel;
    // 0..2 kernel row, 3 forced to zero (goal achieved)
    std::vector<std::uint32_t> priority_row;
    std::uint32_t threat_row = 0;
};

MissionModel::MissionModel(ModelConfig cfg, CostForm form) : cfg_(std::move(cfg)), form_(form) {
    auto errors = validate_config(cfg_);
    if (form_ == CostForm::local && cfg_.layout.goal_count() != 1) {
        errors.push_back("layout.goal_count: local cost form requires a single goal");
    }
    if (!errors.empty()) throw ValidationError(std::move(errors));

    states_ = static_cast<std::size_t>(fmdp::state_count(cfg_.layout));
    actions_ = mission_action_count(cfg_.layout.goal_count());
    radices_ = cfg_.layout.radices();

    const auto F = static_cast<std::size_t>(cfg_.layout.fault_count());
    const auto k = static_cast<std::size_t>(cfg_.layout.goal_count());
    dynamics_.radices = radices_;
    dynamics_.kernels.assign(radices_.size(), std::nullopt);

    Kernel stacked(kFaultClasses * F, F);
    const Kernel* classes[kFaultClasses] = {&cfg_.fault_kernels.normal, &cfg_.fault_kernels.agile,
                                            &cfg_.fault_kernels.recharge, &cfg_.fault_kernels.repair};
    for (std::size_t c = 0; c < kFaultClasses; ++c) {
        for (std::size_t r = 0; r < F; ++r) {
            for (std::size_t n = 0; n < F; ++n) stacked.at(c * F + r, n) = classes[c]->at(r, n);
        }
    }
    dynamics_.kernels[cfg_.layout.fault_digit()] = std::move(stacked);

    if (cfg_.range_dynamics == RangeDynamics::decay) {
        Kernel decay(3, 2);
        decay.at(0, 0) = 1.0;
        decay.at(1, 1) = 1.0;
        decay.at(2, 0) = cfg_.range_decay_probability;
        decay.at(2, 1) = 1.0 - cfg_.range_decay_probability;
        for (std::size_t j = 0; j < k; ++j) dynamics_.kernels[cfg_.layout.range_digit(static_cast<int>(j))] = decay;
    }
    for (std::size_t j = 0; j < k; ++j) {
        Kernel g(4, 3);
        for (std::size_t r = 0; r < 3; ++r) {
            for (std::size_t n = 0; n < 3; ++n) g.at(r, n) = cfg_.priority_kernels[j].at(r, n);
        }
        g.at(3, 0) = 1.0;
        dynamics_.kernels[cfg_.layout.priority_digit(static_cast<int>(j))] = std::move(g);
    }
    dynamics_.kernels[cfg_.layout.threat_digit()] = cfg_.threat_kernel;
    selector_dims_ = dynamics_.selector_dims();
}

int MissionModel::step_toward(int from, int to) const {
    const int cols = cfg_.grid_cols;
    int r = from / cols;
    int c = from % cols;
    const int tr = to / cols;
    const int tc = to % cols;
    if (r != tr) {
        r += (tr > r) ? 1 : -1;
    } else if (c != tc) {
        c += (tc > c) ? 1 : -1;
    }
    return r * cols + c;
}

double MissionModel::distance(int from, int to) const {
    const int dr = std::abs(from / cfg_.grid_cols - to / cfg_.grid_cols);
    const int dc = std::abs(from % cfg_.grid_cols - to % cfg_.grid_cols);
    if (cfg_.distance_metric == DistanceMetric::manhattan) return static_cast<double>(dr + dc);
    return std::sqrt(static_cast<double>(dr * dr + dc * dc));
}

std::optional<int> MissionModel::target_cell(const ActionSpec& spec) const {
    switch (spec.kind) {
        case ActionKind::commit:
            return cfg_.goal_cells[static_cast<std::size_t>(spec.goal)];
        case ActionKind::recharge:
        case ActionKind::repair:
            return cfg_.base_cell;
        case ActionKind::no_commitment:
            if (cfg_.idle_behavior == IdleBehavior::return_to_base) return cfg_.base_cell;
            return std::nullopt;
    }
    return std::nullopt;
}

double MissionModel::distance_cost(const ActionSpec& spec, int location) const {
    if (spec.kind == ActionKind::no_commitment) return 0.0;
    return cfg_.distance_scale * distance(location, *target_cell(spec));
}

MissionModel::Plan MissionModel::plan(const MissionState& s, int action) const {
    const int k = cfg_.layout.goal_count();
    const auto F = static_cast<std::size_t>(cfg_.layout.fault_count());
    const ActionSpec a = describe_action(action, k);

    Plan p;
    const auto target = target_cell(a);
    p.next_location = target ? step_toward(s.location, *target) : s.location;
    p.next_commitment = a.kind == ActionKind::commit ? a.goal + 1 : 0;
    p.next_mode = a.agile ? 1 : 0;
    const bool at_base = p.next_location == cfg_.base_cell;

    std::size_t fault_class = kNormal;
    if (a.kind == ActionKind::repair) {
        fault_class = at_base ? kRepair : kNormal;
    } else if (a.kind == ActionKind::recharge) {
        fault_class = kRecharge;
    } else if (a.agile) {
        fault_class = kAgile;
    }
    p.fault_row = fault_class * F + static_cast<std::size_t>(s.fault - 1);

    const bool recharged = a.kind == ActionKind::recharge && at_base;
    const bool moved = p.next_location != s.location;
    p.range_sel.resize(static_cast<std::size_t>(k));
    p.priority_row.resize(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        const std::uint32_t r = s.range_flags[ju];
        if (recharged) {
            p.range_sel[ju] = 1;
        } else if (cfg_.range_dynamics == RangeDynamics::decay && moved && r == 1) {
            p.range_sel[ju] = 2;
        } else {
            p.range_sel[ju] = r;
        }
        const bool achieved = s.location == cfg_.goal_cells[ju] && s.commitment == j + 1;
        p.priority_row[ju] = achieved ? 3u : s.goal_priorities[ju];
    }
    p.threat_row = static_cast<std::uint32_t>(s.threat);
    return p;
}

double MissionModel::cost(const MissionState& s, int action) const {
    const ActionSpec a = describe_action(action, cfg_.layout.goal_count());
    return cost_terms(s, a, cfg_, form_ == CostForm::global).total();
}

double MissionModel::cost(std::size_t s, std::size_t a) const {
    return cost(decode_state(StateIndex{s}, cfg_.layout), static_cast<int>(a) + 1);
}

std::uint64_t MissionModel::factored_key(std::size_t s, std::size_t a) const {
    const MissionState st = decode_state(StateIndex{s}, cfg_.layout);
    const Plan p = plan(st, static_cast<int>(a) + 1);
    const int k = cfg_.layout.goal_count();

    std::vector<std::uint64_t> sel(radices_.size());
    sel[cfg_.layout.fault_digit()] = p.fault_row;
    for (int j = 0; j < k; ++j) {
        sel[cfg_.layout.range_digit(j)] = p.range_sel[static_cast<std::size_t>(j)];
        sel[cfg_.layout.priority_digit(j)] = p.priority_row[static_cast<std::size_t>(j)];
    }
    sel[cfg_.layout.location_digit()] = static_cast<std::uint64_t>(p.next_location);
    sel[cfg_.layout.commitment_digit()] = static_cast<std::uint64_t>(p.next_commitment);
    sel[cfg_.layout.threat_digit()] = p.threat_row;
    sel[cfg_.layout.mode_digit()] = static_cast<std::uint64_t>(p.next_mode);

    std::uint64_t key = 0;
    for (std::size_t d = 0; d < sel.size(); ++d) key = key * selector_dims_[d] + sel[d];
    return key;
}

std::vector<std::pair<MissionState, double>> MissionModel::transition_distribution(const MissionState& s,
                                                                                   int action) const {
    auto errors = validate_state(s, cfg_.layout);
    if (!errors.empty()) throw ValidationError(std::move(errors));
    const Plan p = plan(s, action);
    const int k = cfg_.layout.goal_count();
    const auto F = static_cast<std::size_t>(cfg_.layout.fault_count());

    // Per-digit outcome lists (value, probability) for every stochastic factor.
    struct Outcome {
        std::uint32_t value;
        double prob;
    };
    std::vector<std::vector<Outcome>> factors;

    auto from_row = [](const Kernel& kern, std::size_t row) {
        std::vector<Outcome> out;
        for (std::size_t n = 0; n < kern.cols; ++n) {
            if (kern.at(row, n) > 0.0) out.push_back({static_cast<std::uint32_t>(n), kern.at(row, n)});
        }
        return out;
    };
    factors.push_back(from_row(*dynamics_.kernels[cfg_.layout.fault_digit()], p.fault_row));
    for (int j = 0; j < k; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        if (cfg_.range_dynamics == RangeDynamics::decay) {
            factors.push_back(from_row(*dynamics_.kernels[cfg_.layout.range_digit(j)], p.range_sel[ju]));
        } else {
            factors.push_back({{p.range_sel[ju], 1.0}});
        }
    }
    for (int j = 0; j < k; ++j) {
        factors.push_back(
            from_row(*dynamics_.kernels[cfg_.layout.priority_digit(j)], p.priority_row[static_cast<std::size_t>(j)]));
    }
    factors.push_back(from_row(cfg_.threat_kernel, p.threat_row));
    (void)F;

    std::vector<std::pair<MissionState, double>> out;
    std::vector<std::size_t> pick(factors.size(), 0);
    while (true) {
        MissionState n;
        double prob = 1.0;
        std::size_t fi = 0;
        n.fault = static_cast<int>(factors[fi][pick[fi]].value) + 1;
        prob *= factors[fi][pick[fi]].prob;
        ++fi;
        n.range_flags.resize(static_cast<std::size_t>(k));
        n.goal_priorities.resize(static_cast<std::size_t>(k));
        for (int j = 0; j < k; ++j, ++fi) {
            n.range_flags[static_cast<std::size_t>(j)] = static_cast<std::uint8_t>(factors[fi][pick[fi]].value);
            prob *= factors[fi][pick[fi]].prob;
        }
        for (int j = 0; j < k; ++j, ++fi) {
            n.goal_priorities[static_cast<std::size_t>(j)] = static_cast<std::uint8_t>(factors[fi][pick[fi]].value);
            prob *= factors[fi][pick[fi]].prob;
        }
        n.location = p.next_location;
        n.commitment = p.next_commitment;
        n.threat = static_cast<int>(factors[fi][pick[fi]].value);
        prob *= factors[fi][pick[fi]].prob;
        n.nav_mode = p.next_mode;
        out.emplace_back(std::move(n), prob);

        std::size_t d = factors.size();
        while (d > 0) {
            --d;
            if (++pick[d] < factors[d].size()) break;
            pick[d] = 0;
            if (d == 0) return out;
        }
    }
}

void MissionModel::successors(std::size_t s, std::size_t a, std::vector<Successor>& out) const {
    out.clear();
    const MissionState st = decode_state(StateIndex{s}, cfg_.layout);
    for (auto& [next, prob] : transition_distribution(st, static_cast<int>(a) + 1)) {
        out.push_back({static_cast<std::size_t>(encode_state(next, cfg_.layout).value), prob});
    }
}

ValidationReport validate_model(const MdpModel& model, double tol) { return {check_model(model, tol)}; }

}  // namespace fmdp
