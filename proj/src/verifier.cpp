#include "fmdp/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "fmdp/errors.hpp"

namespace fmdp {

ProductMdp::ProductMdp(std::vector<std::shared_ptr<const MdpModel>> factors, Coupling coupling)
    : factors_(std::move(factors)), coupling_(std::move(coupling)) {
    if (factors_.empty()) throw ContractError("product needs at least one factor");
    gamma_ = factors_.front()->discount();
    for (const auto& f : factors_) {
        if (f->discount() != gamma_) throw ContractError("product factors must share one discount factor");
        states_ *= f->state_count();
        actions_ *= f->action_count();
        dynamics_.radices.push_back(static_cast<std::uint32_t>(f->state_count()));

        const std::size_t S = f->state_count();
        const std::size_t A = f->action_count();
        Kernel k(S * A, S);
        std::vector<Successor> succ;
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t a = 0; a < A; ++a) {
                f->successors(s, a, succ);
                for (const auto& e : succ) k.at(s * A + a, e.state) += e.probability;
            }
        }
        dynamics_.kernels.push_back(std::move(k));
    }
}

std::vector<std::size_t> ProductMdp::split_state(std::size_t s) const {
    std::vector<std::size_t> parts(factors_.size());
    for (std::size_t i = factors_.size(); i-- > 0;) {
        parts[i] = s % factors_[i]->state_count();
        s /= factors_[i]->state_count();
    }
    return parts;
}

std::vector<std::size_t> ProductMdp::split_action(std::size_t a) const {
    std::vector<std::size_t> parts(factors_.size());
    for (std::size_t i = factors_.size(); i-- > 0;) {
        parts[i] = a % factors_[i]->action_count();
        a /= factors_[i]->action_count();
    }
    return parts;
}

std::size_t ProductMdp::join_state(const std::vector<std::size_t>& parts) const {
    std::size_t s = 0;
    for (std::size_t i = 0; i < factors_.size(); ++i) s = s * factors_[i]->state_count() + parts[i];
    return s;
}

std::size_t ProductMdp::join_action(const std::vector<std::size_t>& parts) const {
    std::size_t a = 0;
    for (std::size_t i = 0; i < factors_.size(); ++i) a = a * factors_[i]->action_count() + parts[i];
    return a;
}

double ProductMdp::cost(std::size_t s, std::size_t a) const {
    const auto sp = split_state(s);
    const auto ap = split_action(a);
    double c = 0.0;
    for (std::size_t i = 0; i < factors_.size(); ++i) c += factors_[i]->cost(sp[i], ap[i]);
    if (coupling_) c += coupling_(sp, ap);
    return c;
}

void ProductMdp::successors(std::size_t s, std::size_t a, std::vector<Successor>& out) const {
    const auto sp = split_state(s);
    const auto ap = split_action(a);
    std::vector<std::vector<Successor>> rows(factors_.size());
    for (std::size_t i = 0; i < factors_.size(); ++i) factors_[i]->successors(sp[i], ap[i], rows[i]);
    out.clear();
    std::vector<std::size_t> pick(factors_.size(), 0);
    while (true) {
        std::size_t idx = 0;
        double p = 1.0;
        for (std::size_t i = 0; i < factors_.size(); ++i) {
            idx = idx * factors_[i]->state_count() + rows[i][pick[i]].state;
            p *= rows[i][pick[i]].probability;
        }
        out.push_back({idx, p});
        std::size_t d = factors_.size();
        while (d > 0) {
            --d;
            if (++pick[d] < rows[d].size()) break;
            pick[d] = 0;
            if (d == 0) return;
        }
    }
}

std::uint64_t ProductMdp::factored_key(std::size_t s, std::size_t a) const {
    const auto sp = split_state(s);
    const auto ap = split_action(a);
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
        const std::uint64_t A = factors_[i]->action_count();
        key = key * (factors_[i]->state_count() * A) + sp[i] * A + ap[i];
    }
    return key;
}

ProductMdp build_product_mdp(std::vector<std::shared_ptr<const MdpModel>> factors) {
    return ProductMdp(std::move(factors));
}

std::vector<double> dirichlet_row(Rng& rng, std::size_t n) {
    std::vector<double> row(n);
    double sum = 0.0;
    for (auto& x : row) {
        x = -std::log(1.0 - uniform01(rng));  // 1-u lies in (0,1]
        sum += x;
    }
    if (sum <= 0.0) {
        std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(n));
        return row;
    }
    for (auto& x : row) x /= sum;
    return row;
}

std::shared_ptr<const TabularMdp> random_tabular_mdp(Rng& rng, std::size_t states, std::size_t actions,
                                                     double discount, double cost_max) {
    std::vector<std::vector<std::vector<Successor>>> rows(states, std::vector<std::vector<Successor>>(actions));
    std::vector<std::vector<double>> costs(states, std::vector<double>(actions));
    for (std::size_t s = 0; s < states; ++s) {
        for (std::size_t a = 0; a < actions; ++a) {
            costs[s][a] = cost_max * uniform01(rng);
            const auto p = dirichlet_row(rng, states);
            for (std::size_t n = 0; n < states; ++n) {
                if (p[n] > 0.0) rows[s][a].push_back({n, p[n]});
            }
        }
    }
    return std::make_shared<const TabularMdp>(std::move(rows), std::move(costs), discount);
}

ProductMdp random_product(std::uint64_t seed, std::size_t factor_count, const RandomMdpSpec& spec) {
    Rng rng(seed);
    std::vector<std::shared_ptr<const MdpModel>> factors;
    for (std::size_t i = 0; i < factor_count; ++i) {
        const auto S = static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(spec.min_states),
                                                            static_cast<std::int64_t>(spec.max_states)));
        const auto A = static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(spec.min_actions),
                                                            static_cast<std::int64_t>(spec.max_actions)));
        factors.push_back(random_tabular_mdp(rng, S, A, spec.discount, spec.cost_max));
    }
    return ProductMdp(std::move(factors));
}

PolicyComparisonReport compare_policies(const Policy& a, const Policy& b, const std::vector<double>* q,
                                        std::size_t actions, double tie_tolerance) {
    if (a.actions.size() != b.actions.size()) {
        throw ContractError("policies cover different state counts (" + std::to_string(a.actions.size()) + " vs " +
                            std::to_string(b.actions.size()) + ")");
    }
    if (q != nullptr && q->size() != a.actions.size() * actions) throw ContractError("Q table has the wrong shape");
    PolicyComparisonReport r;
    r.total_states = a.actions.size();
    r.tie_aware = q != nullptr;
    r.tie_tolerance = q != nullptr ? tie_tolerance : 0.0;
    for (std::size_t s = 0; s < a.actions.size(); ++s) {
        const int x = a.actions[s];
        const int y = b.actions[s];
        bool match = x == y;
        if (match) ++r.exact_matching;
        if (!match && q != nullptr) {
            const double qx = (*q)[s * actions + static_cast<std::size_t>(x - 1)];
            const double qy = (*q)[s * actions + static_cast<std::size_t>(y - 1)];
            match = std::abs(qx - qy) <= tie_tolerance;
        }
        if (match) {
            ++r.matching;
        } else {
            ++r.mismatching;
            if (r.mismatch_samples.size() < PolicyComparisonReport::kMaxSamples) r.mismatch_samples.push_back({s, x, y});
        }
    }
    r.match_percent = r.total_states == 0 ? 100.0
                                          : 100.0 * static_cast<double>(r.matching) /
                                                static_cast<double>(r.total_states);
    return r;
}

PolicyComparisonReport compare_policies(const Policy& a, const Policy& b, const MdpModel& model,
                                        const ValueFunction& v, double tie_tolerance) {
    if (a.actions.size() != model.state_count()) throw ContractError("policy does not match the model");
    BellmanOperator op(model);
    const auto q = q_table(op, v);
    return compare_policies(a, b, &q, model.action_count(), tie_tolerance);
}

namespace {

struct ProductSolve {
    std::vector<SolveResult> factor;
    std::vector<Policy> factor_policy;
    SolveResult global;
};

ProductSolve solve_product(const ProductMdp& product, double tolerance, std::uint64_t cap) {
    if (product.state_count() > cap) {
        throw CapacityError("product has " + std::to_string(product.state_count()) + " states, cap is " +
                            std::to_string(cap));
    }
    SolveOptions opt;
    opt.tolerance = tolerance;
    opt.max_sweeps = 1'000'000;
    ProductSolve out;
    for (const auto& f : product.factors()) {
        BellmanOperator op(*f);
        out.factor.push_back(value_iteration(op, opt));
        out.factor_policy.push_back(extract_policy(op, out.factor.back().value));
    }
    out.global = value_iteration(product, opt);
    return out;
}

}  // namespace

PolicyComparisonReport verify_policy_equivalence(const ProductMdp& product, double tolerance, std::uint64_t cap) {
    ProductSolve ps = solve_product(product, tolerance, cap);
    BellmanOperator op(product);
    const Policy global = extract_policy(op, ps.global.value);
    const auto q = q_table(op, ps.global.value);

    Policy concat;
    concat.actions.resize(product.state_count());
    std::vector<std::size_t> parts(product.factors().size());
    for (std::size_t s = 0; s < product.state_count(); ++s) {
        const auto sp = product.split_state(s);
        for (std::size_t i = 0; i < parts.size(); ++i) {
            parts[i] = static_cast<std::size_t>(ps.factor_policy[i].actions[sp[i]] - 1);
        }
        concat.actions[s] = static_cast<int>(product.join_action(parts)) + 1;
    }
    // Q values from a V that is only tolerance-accurate: genuine ties can
    // differ by about 2*gamma*||V - V*||.
    const double gamma = product.discount();
    const double tie = 4.0 * tolerance / (1.0 - gamma) + 1e-12;
    auto report = compare_policies(concat, global, &q, product.action_count(), tie);
    report.assumption_violation = product.coupled();
    return report;
}

double verify_additive_value(const ProductMdp& product, double tolerance, std::uint64_t cap) {
    ProductSolve ps = solve_product(product, tolerance, cap);
    double dev = 0.0;
    for (std::size_t s = 0; s < product.state_count(); ++s) {
        const auto sp = product.split_state(s);
        double sum = 0.0;
        for (std::size_t i = 0; i < sp.size(); ++i) sum += ps.factor[i].value.values[sp[i]];
        dev = std::max(dev, std::abs(ps.global.value.values[s] - sum));
    }
    return dev;
}

NextStateDiff compare_next_state(const MissionState& s, const Policy& combined, const Policy& global,
                                 const MissionModel& model) {
    const std::uint64_t idx = encode_state(s, model.layout()).value;
    if (combined.actions.size() != model.state_count() || global.actions.size() != model.state_count()) {
        throw ContractError("policy does not match the model");
    }
    NextStateDiff d;
    d.state = s;
    d.action_combined = combined.actions[idx];
    d.action_global = global.actions[idx];
    d.successors_combined = model.transition_distribution(s, d.action_combined);
    d.successors_global = model.transition_distribution(s, d.action_global);

    auto keyed = [&](const std::vector<std::pair<MissionState, double>>& dist) {
        std::vector<std::pair<std::uint64_t, double>> out;
        for (const auto& [st, p] : dist) out.emplace_back(encode_state(st, model.layout()).value, p);
        std::sort(out.begin(), out.end());
        return out;
    };
    const auto a = keyed(d.successors_combined);
    const auto b = keyed(d.successors_global);
    bool same = d.action_combined == d.action_global && a.size() == b.size();
    for (std::size_t i = 0; same && i < a.size(); ++i) {
        same = a[i].first == b[i].first && std::abs(a[i].second - b[i].second) <= 1e-9;
    }
    d.identical = same;
    return d;
}

ComplexityReduction complexity_reduction(const std::vector<std::uint64_t>& sub_counts, std::uint64_t global_count) {
    ComplexityReduction c;
    c.global_proxy = static_cast<double>(global_count) * static_cast<double>(global_count);
    for (auto n : sub_counts) c.decomposed_proxy += static_cast<double>(n) * static_cast<double>(n);
    c.ratio = c.decomposed_proxy > 0.0 ? c.global_proxy / c.decomposed_proxy : 0.0;
    return c;
}

ComplexityReduction complexity_reduction(const DecompositionPlan& plan, std::uint64_t global_count) {
    std::vector<std::uint64_t> counts;
    for (const auto& s : plan.subs) counts.push_back(s.state_count());
    return complexity_reduction(counts, global_count);
}

nlohmann::json report_to_json(const PolicyComparisonReport& r) {
    nlohmann::json j;
    j["total_states"] = r.total_states;
    j["matching"] = r.matching;
    j["mismatching"] = r.mismatching;
    j["match_percent"] = r.match_percent;
    j["exact_matching"] = r.exact_matching;
    j["tie_aware"] = r.tie_aware;
    j["tie_tolerance"] = r.tie_tolerance;
    j["assumption_violation"] = r.assumption_violation;
    if (r.seed) j["seed"] = *r.seed;
    auto samples = nlohmann::json::array();
    for (const auto& m : r.mismatch_samples) {
        samples.push_back({{"state", m.state}, {"action_a", m.action_a}, {"action_b", m.action_b}});
    }
    j["mismatch_samples"] = samples;
    return j;
}

void write_agreement_csv(std::ostream& os, const PolicyComparisonReport& r) {
    const double total = r.total_states == 0 ? 1.0 : static_cast<double>(r.total_states);
    os << "category,count,percent\n";
    os << "match," << r.matching << ',' << 100.0 * static_cast<double>(r.matching) / total << '\n';
    os << "mismatch," << r.mismatching << ',' << 100.0 * static_cast<double>(r.mismatching) / total << '\n';
}

}  // namespace fmdp
