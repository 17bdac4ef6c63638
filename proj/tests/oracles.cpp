#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace oracle {

std::string state_count(int f, int g, int l, int t, int m) {
    unsigned __int128 n = static_cast<unsigned __int128>(f);
    for (int j = 0; j < g; ++j) n *= 6;  // range flag x priority
    n *= static_cast<unsigned __int128>(g + 1);
    n *= static_cast<unsigned __int128>(l);
    n *= static_cast<unsigned __int128>(t);
    n *= static_cast<unsigned __int128>(m);
    std::string s;
    do {
        s.push_back(static_cast<char>('0' + static_cast<int>(n % 10)));
        n /= 10;
    } while (n != 0);
    std::reverse(s.begin(), s.end());
    return s;
}

DenseMdp random_dense(fmdp::Rng& rng, std::size_t states, std::size_t actions, double gamma) {
    DenseMdp m;
    m.states = states;
    m.actions = actions;
    m.gamma = gamma;
    m.cost.assign(states, std::vector<double>(actions));
    m.prob.assign(states, std::vector<std::vector<double>>(actions, std::vector<double>(states)));
    for (std::size_t s = 0; s < states; ++s) {
        for (std::size_t a = 0; a < actions; ++a) {
            m.cost[s][a] = 10.0 * fmdp::uniform01(rng);
            double sum = 0.0;
            for (auto& p : m.prob[s][a]) {
                p = -std::log(1.0 - fmdp::uniform01(rng));
                sum += p;
            }
            for (auto& p : m.prob[s][a]) p /= sum;
        }
    }
    return m;
}

std::vector<double> evaluate(const DenseMdp& m, const std::vector<std::size_t>& policy) {
    const auto n = static_cast<Eigen::Index>(m.states);
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd c(n);
    for (Eigen::Index s = 0; s < n; ++s) {
        const std::size_t a = policy[static_cast<std::size_t>(s)];
        c(s) = m.cost[static_cast<std::size_t>(s)][a];
        for (Eigen::Index t = 0; t < n; ++t) {
            A(s, t) -= m.gamma * m.prob[static_cast<std::size_t>(s)][a][static_cast<std::size_t>(t)];
        }
    }
    const Eigen::VectorXd v = A.partialPivLu().solve(c);
    return {v.data(), v.data() + n};
}

Enumerated enumerate_policies(const DenseMdp& m, double tie) {
    std::size_t total = 1;
    for (std::size_t s = 0; s < m.states; ++s) total *= m.actions;

    std::vector<std::vector<double>> values(total);
    std::vector<std::vector<std::size_t>> policies(total);
    Enumerated out;
    out.value.assign(m.states, std::numeric_limits<double>::infinity());
    for (std::size_t code = 0; code < total; ++code) {
        std::vector<std::size_t> pi(m.states);
        std::size_t c = code;
        for (std::size_t s = 0; s < m.states; ++s) {
            pi[s] = c % m.actions;
            c /= m.actions;
        }
        values[code] = evaluate(m, pi);
        policies[code] = pi;
        for (std::size_t s = 0; s < m.states; ++s) out.value[s] = std::min(out.value[s], values[code][s]);
    }
    for (std::size_t code = 0; code < total; ++code) {
        bool all = true;
        for (std::size_t s = 0; s < m.states && all; ++s) all = values[code][s] <= out.value[s] + tie;
        if (all) out.optimal.push_back(policies[code]);
    }
    return out;
}

namespace {

struct Decoded {
    enum Kind { idle, commit, recharge, repair } kind = idle;
    int goal = -1;
    bool agile = false;
};

Decoded decode_action(int id, int k) {
    Decoded d;
    if (id == 1) return d;
    if (id <= k + 1) return {Decoded::commit, id - 2, false};
    if (id == k + 2) return {Decoded::idle, -1, true};
    if (id <= 2 * k + 2) return {Decoded::commit, id - k - 3, true};
    if (id == 2 * k + 3) return {Decoded::recharge, -1, false};
    return {Decoded::repair, -1, false};
}

int target_of(const Decoded& d, const fmdp::ModelConfig& cfg, int here) {
    switch (d.kind) {
        case Decoded::commit:
            return cfg.goal_cells[static_cast<std::size_t>(d.goal)];
        case Decoded::recharge:
        case Decoded::repair:
            return cfg.base_cell;
        case Decoded::idle:
            return cfg.idle_behavior == fmdp::IdleBehavior::return_to_base ? cfg.base_cell : here;
    }
    return here;
}

}  // namespace

double cost(const fmdp::MissionState& s, int action, const fmdp::ModelConfig& cfg, bool with_h) {
    const int k = cfg.layout.goal_count();
    double total = 0.0;
    bool every_in_range = true;
    for (int j = 0; j < k; ++j) {
        const auto u = static_cast<std::size_t>(j);
        const int g = s.goal_priorities[u];
        const int r = s.range_flags[u];
        if (r == 1 && s.commitment != j + 1) total += cfg.goal_weights[u] * g;
        if (r == 0) {
            total += cfg.range_penalties[u] * g;
            every_in_range = false;
        }
    }
    total += cfg.fault_penalties[static_cast<std::size_t>(s.fault - 1)][every_in_range ? 1 : 0];
    total += cfg.threat_penalties[static_cast<std::size_t>(s.threat)][static_cast<std::size_t>(s.nav_mode)];
    const Decoded d = decode_action(action, k);
    if (with_h && d.kind != Decoded::idle) {
        const int to = target_of(d, cfg, s.location);
        const double dr = std::abs(s.location / cfg.grid_cols - to / cfg.grid_cols);
        const double dc = std::abs(s.location % cfg.grid_cols - to % cfg.grid_cols);
        const double dist = cfg.distance_metric == fmdp::DistanceMetric::manhattan ? dr + dc : std::hypot(dr, dc);
        total += cfg.distance_scale * dist;
    }
    return total;
}

std::vector<int> digits(const fmdp::MissionState& s) {
    std::vector<int> d{s.fault};
    for (auto r : s.range_flags) d.push_back(r);
    for (auto g : s.goal_priorities) d.push_back(g);
    d.push_back(s.location);
    d.push_back(s.commitment);
    d.push_back(s.threat);
    d.push_back(s.nav_mode);
    return d;
}

std::uint64_t index_of(const std::vector<int>& d, const fmdp::ModelConfig& cfg) {
    const auto& L = cfg.layout;
    const int k = L.goal_count();
    std::vector<std::uint64_t> radix{static_cast<std::uint64_t>(L.fault_count())};
    for (int j = 0; j < k; ++j) radix.push_back(2);
    for (int j = 0; j < k; ++j) radix.push_back(3);
    radix.push_back(static_cast<std::uint64_t>(L.location_count()));
    radix.push_back(static_cast<std::uint64_t>(k + 1));
    radix.push_back(static_cast<std::uint64_t>(L.threat_count()));
    radix.push_back(static_cast<std::uint64_t>(L.mode_count()));
    std::uint64_t idx = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const std::uint64_t digit = i == 0 ? static_cast<std::uint64_t>(d[i] - 1) : static_cast<std::uint64_t>(d[i]);
        idx = idx * radix[i] + digit;
    }
    return idx;
}

std::map<std::vector<int>, double> transition(const fmdp::MissionState& s, int action,
                                              const fmdp::ModelConfig& cfg) {
    const int k = cfg.layout.goal_count();
    const int F = cfg.layout.fault_count();
    const Decoded d = decode_action(action, k);

    // Location: one step toward the target, rows first.
    const int to = target_of(d, cfg, s.location);
    int row = s.location / cfg.grid_cols;
    int col = s.location % cfg.grid_cols;
    if (row != to / cfg.grid_cols) {
        row += to / cfg.grid_cols > row ? 1 : -1;
    } else if (col != to % cfg.grid_cols) {
        col += to % cfg.grid_cols > col ? 1 : -1;
    }
    const int l2 = row * cfg.grid_cols + col;
    const int c2 = d.kind == Decoded::commit ? d.goal + 1 : 0;
    const int m2 = d.agile ? 1 : 0;
    const bool at_base = l2 == cfg.base_cell;

    const fmdp::Kernel* fk = &cfg.fault_kernels.normal;
    if (d.kind == Decoded::repair && at_base) fk = &cfg.fault_kernels.repair;
    if (d.kind == Decoded::recharge) fk = &cfg.fault_kernels.recharge;
    if (d.kind != Decoded::repair && d.kind != Decoded::recharge && d.agile) fk = &cfg.fault_kernels.agile;

    // Per-goal marginals over (r', g').
    std::vector<std::vector<std::pair<std::pair<int, int>, double>>> goal_options(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        const auto u = static_cast<std::size_t>(j);
        std::vector<std::pair<int, double>> r_opts;
        if (d.kind == Decoded::recharge && at_base) {
            r_opts = {{1, 1.0}};
        } else if (cfg.range_dynamics == fmdp::RangeDynamics::decay && l2 != s.location && s.range_flags[u] == 1) {
            r_opts = {{0, cfg.range_decay_probability}, {1, 1.0 - cfg.range_decay_probability}};
        } else {
            r_opts = {{s.range_flags[u], 1.0}};
        }
        std::vector<std::pair<int, double>> g_opts;
        if (s.location == cfg.goal_cells[u] && s.commitment == j + 1) {
            g_opts = {{0, 1.0}};
        } else {
            for (int g = 0; g < 3; ++g) g_opts.push_back({g, cfg.priority_kernels[u].at(s.goal_priorities[u], g)});
        }
        for (auto [r, pr] : r_opts) {
            for (auto [g, pg] : g_opts) goal_options[u].push_back({{r, g}, pr * pg});
        }
    }

    std::map<std::vector<int>, double> out;
    for (int f = 1; f <= F; ++f) {
        const double pf = fk->at(static_cast<std::size_t>(s.fault - 1), static_cast<std::size_t>(f - 1));
        if (pf == 0.0) continue;
        for (int t = 0; t < cfg.layout.threat_count(); ++t) {
            const double pt = cfg.threat_kernel.at(static_cast<std::size_t>(s.threat), static_cast<std::size_t>(t));
            if (pt == 0.0) continue;
            // Odometer over goal options.
            std::vector<std::size_t> pick(static_cast<std::size_t>(k), 0);
            while (true) {
                double p = pf * pt;
                std::vector<int> rs, gs;
                for (int j = 0; j < k; ++j) {
                    const auto& o = goal_options[static_cast<std::size_t>(j)][pick[static_cast<std::size_t>(j)]];
                    p *= o.second;
                    rs.push_back(o.first.first);
                    gs.push_back(o.first.second);
                }
                if (p != 0.0) {
                    std::vector<int> key{f};
                    key.insert(key.end(), rs.begin(), rs.end());
                    key.insert(key.end(), gs.begin(), gs.end());
                    key.insert(key.end(), {l2, c2, t, m2});
                    out[key] += p;
                }
                int j = 0;
                for (; j < k; ++j) {
                    const auto u = static_cast<std::size_t>(j);
                    if (++pick[u] < goal_options[u].size()) break;
                    pick[u] = 0;
                }
                if (j == k) break;
            }
        }
    }
    return out;
}

fmdp::MissionState random_state(fmdp::Rng& rng, const fmdp::StateLayout& layout) {
    fmdp::MissionState s;
    const int k = layout.goal_count();
    s.fault = static_cast<int>(fmdp::uniform_int(rng, 1, layout.fault_count()));
    for (int j = 0; j < k; ++j) s.range_flags.push_back(static_cast<std::uint8_t>(fmdp::uniform_int(rng, 0, 1)));
    for (int j = 0; j < k; ++j) s.goal_priorities.push_back(static_cast<std::uint8_t>(fmdp::uniform_int(rng, 0, 2)));
    s.location = static_cast<int>(fmdp::uniform_int(rng, 0, layout.location_count() - 1));
    s.commitment = static_cast<int>(fmdp::uniform_int(rng, 0, k));
    s.threat = static_cast<int>(fmdp::uniform_int(rng, 0, layout.threat_count() - 1));
    s.nav_mode = static_cast<int>(fmdp::uniform_int(rng, 0, layout.mode_count() - 1));
    return s;
}

}  // namespace oracle
