#include "fmdp/mdp.hpp"

#include <cmath>

#include "fmdp/errors.hpp"

namespace fmdp {

Kernel Kernel::identity(std::size_t n) {
    Kernel k(n, n);
    for (std::size_t i = 0; i < n; ++i) k.at(i, i) = 1.0;
    return k;
}

std::vector<std::size_t> non_stochastic_rows(const Kernel& k, double tol) {
    std::vector<std::size_t> bad;
    for (std::size_t r = 0; r < k.rows; ++r) {
        double sum = 0.0;
        bool ok = true;
        for (double v : k.row(r)) {
            if (!(v >= 0.0 && v <= 1.0)) ok = false;
            sum += v;
        }
        if (!ok || std::abs(sum - 1.0) > tol) bad.push_back(r);
    }
    return bad;
}

std::vector<std::uint64_t> FactoredDynamics::selector_dims() const {
    std::vector<std::uint64_t> dims(radices.size());
    for (std::size_t d = 0; d < radices.size(); ++d) dims[d] = kernels[d] ? kernels[d]->rows : radices[d];
    return dims;
}

std::uint64_t FactoredDynamics::selector_count() const {
    std::uint64_t n = 1;
    for (auto d : selector_dims()) n *= d;
    return n;
}

std::uint64_t MdpModel::factored_key(std::size_t, std::size_t) const {
    throw ContractError("model has no factored dynamics");
}

TabularMdp::TabularMdp(std::vector<std::vector<std::vector<Successor>>> transitions,
                       std::vector<std::vector<double>> costs, double discount)
    : states_(transitions.size()),
      actions_(transitions.empty() ? 0 : transitions.front().size()),
      discount_(discount) {
    if (states_ == 0 || actions_ == 0) throw ContractError("TabularMdp needs at least one state and action");
    if (costs.size() != states_) throw ContractError("TabularMdp: cost table has wrong state count");
    costs_.reserve(states_ * actions_);
    row_start_.reserve(states_ * actions_ + 1);
    row_start_.push_back(0);
    for (std::size_t s = 0; s < states_; ++s) {
        if (transitions[s].size() != actions_ || costs[s].size() != actions_) {
            throw ContractError("TabularMdp: state " + std::to_string(s) + " has wrong action count");
        }
        for (std::size_t a = 0; a < actions_; ++a) {
            costs_.push_back(costs[s][a]);
            for (const auto& e : transitions[s][a]) {
                if (e.state >= states_) throw ContractError("TabularMdp: successor out of range");
                entries_.push_back(e);
            }
            row_start_.push_back(entries_.size());
        }
    }
}

TabularMdp TabularMdp::from_dense(const std::vector<std::vector<std::vector<double>>>& probs,
                                  const std::vector<std::vector<double>>& costs, double discount) {
    std::vector<std::vector<std::vector<Successor>>> rows(probs.size());
    for (std::size_t s = 0; s < probs.size(); ++s) {
        rows[s].resize(probs[s].size());
        for (std::size_t a = 0; a < probs[s].size(); ++a) {
            for (std::size_t n = 0; n < probs[s][a].size(); ++n) {
                if (probs[s][a][n] != 0.0) rows[s][a].push_back({n, probs[s][a][n]});
            }
        }
    }
    return TabularMdp(std::move(rows), costs, discount);
}

void TabularMdp::successors(std::size_t s, std::size_t a, std::vector<Successor>& out) const {
    const std::size_t row = s * actions_ + a;
    out.assign(entries_.begin() + static_cast<std::ptrdiff_t>(row_start_[row]),
               entries_.begin() + static_cast<std::ptrdiff_t>(row_start_[row + 1]));
}

double TabularMdp::probability(std::size_t s, std::size_t a, std::size_t next) const {
    const std::size_t row = s * actions_ + a;
    double p = 0.0;
    for (std::size_t i = row_start_[row]; i < row_start_[row + 1]; ++i) {
        if (entries_[i].state == next) p += entries_[i].probability;
    }
    return p;
}

std::vector<ModelIssue> check_model(const MdpModel& model, double tol) {
    std::vector<ModelIssue> issues;
    std::vector<Successor> succ;
    const std::size_t n = model.state_count();
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t a = 0; a < model.action_count(); ++a) {
            const double c = model.cost(s, a);
            if (!std::isfinite(c) || c < 0.0) {
                issues.push_back({s, a, "negative or non-finite cost " + std::to_string(c)});
            }
            model.successors(s, a, succ);
            double mass = 0.0;
            bool entries_ok = true;
            for (const auto& e : succ) {
                if (e.state >= n || !(e.probability >= 0.0 && e.probability <= 1.0)) entries_ok = false;
                mass += e.probability;
            }
            if (!entries_ok) issues.push_back({s, a, "successor entry out of range"});
            if (std::abs(mass - 1.0) > tol) {
                issues.push_back({s, a, "transition mass " + std::to_string(mass)});
            }
        }
    }
    return issues;
}

}  // namespace fmdp
