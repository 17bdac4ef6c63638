#include "fmdp/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "fmdp/errors.hpp"

namespace fmdp {

namespace {

constexpr std::size_t kMaxExplicitEntries = 60'000'000;

using Clock = std::chrono::steady_clock;

}  // namespace

BellmanOperator::BellmanOperator(const MdpModel& model)
    : model_(&model), states_(model.state_count()), actions_(model.action_count()), gamma_(model.discount()) {
    if (states_ == 0 || actions_ == 0) throw ContractError("model has no states or no actions");
    const std::size_t pairs = states_ * actions_;
    costs_.resize(pairs);

    const FactoredDynamics* fd = model.factored();
    if (fd != nullptr) {
        if (fd->selector_count() > std::numeric_limits<std::uint32_t>::max()) {
            throw CapacityError("factored expectation table too large");
        }
        factored_ = true;
        keys_.resize(pairs);
        const auto n = static_cast<std::int64_t>(states_);
#pragma omp parallel for schedule(static)
        for (std::int64_t si = 0; si < n; ++si) {
            const auto s = static_cast<std::size_t>(si);
            for (std::size_t a = 0; a < actions_; ++a) {
                costs_[s * actions_ + a] = model.cost(s, a);
                keys_[s * actions_ + a] = static_cast<std::uint32_t>(model.factored_key(s, a));
            }
        }
        return;
    }

    row_start_.reserve(pairs + 1);
    row_start_.push_back(0);
    std::vector<Successor> succ;
    for (std::size_t s = 0; s < states_; ++s) {
        for (std::size_t a = 0; a < actions_; ++a) {
            costs_[s * actions_ + a] = model.cost(s, a);
            model.successors(s, a, succ);
            entries_.insert(entries_.end(), succ.begin(), succ.end());
            if (entries_.size() > kMaxExplicitEntries) {
                throw CapacityError("explicit transition cache exceeds " + std::to_string(kMaxExplicitEntries) +
                                    " entries");
            }
            row_start_.push_back(entries_.size());
        }
    }
}

void BellmanOperator::contract(const std::vector<double>& v) {
    const FactoredDynamics& fd = *model_->factored();
    std::vector<std::uint64_t> dims(fd.radices.begin(), fd.radices.end());
    table_.assign(v.begin(), v.end());

    for (std::size_t d = 0; d < dims.size(); ++d) {
        if (!fd.kernels[d]) continue;
        const Kernel& k = *fd.kernels[d];
        std::uint64_t outer = 1;
        std::uint64_t inner = 1;
        for (std::size_t i = 0; i < d; ++i) outer *= dims[i];
        for (std::size_t i = d + 1; i < dims.size(); ++i) inner *= dims[i];
        const std::uint64_t cols = dims[d];
        const std::uint64_t rows = k.rows;

        scratch_.assign(outer * rows * inner, 0.0);
        const double* src = table_.data();
        double* dst = scratch_.data();
        const auto blocks = static_cast<std::int64_t>(outer * rows);
#pragma omp parallel for schedule(static)
        for (std::int64_t b = 0; b < blocks; ++b) {
            const auto o = static_cast<std::uint64_t>(b) / rows;
            const auto r = static_cast<std::uint64_t>(b) % rows;
            double* out = dst + static_cast<std::uint64_t>(b) * inner;
            for (std::uint64_t n = 0; n < cols; ++n) {
                const double w = k.at(r, n);
                if (w == 0.0) continue;
                const double* in = src + (o * cols + n) * inner;
                for (std::uint64_t i = 0; i < inner; ++i) out[i] += w * in[i];
            }
        }
        table_.swap(scratch_);
        dims[d] = rows;
    }
}

void BellmanOperator::prepare(const std::vector<double>& v) {
    if (v.size() != states_) throw ContractError("value vector length does not match state count");
    if (factored_) {
        contract(v);
    } else {
        v_ = &v;
    }
}

double BellmanOperator::q(std::size_t s, std::size_t a) const {
    const std::size_t row = s * actions_ + a;
    if (factored_) return costs_[row] + gamma_ * table_[keys_[row]];
    double e = 0.0;
    for (std::size_t i = row_start_[row]; i < row_start_[row + 1]; ++i) {
        e += entries_[i].probability * (*v_)[entries_[i].state];
    }
    return costs_[row] + gamma_ * e;
}

double BellmanOperator::backup(std::size_t s, std::size_t* best) const {
    double m = q(s, 0);
    std::size_t arg = 0;
    for (std::size_t a = 1; a < actions_; ++a) {
        const double x = q(s, a);
        if (x < m) {
            m = x;
            arg = a;
        }
    }
    if (best != nullptr) *best = arg;
    return m;
}

std::size_t BellmanOperator::storage_bytes() const noexcept {
    return costs_.size() * sizeof(double) + keys_.size() * sizeof(std::uint32_t) +
           std::max(table_.size(), scratch_.size()) * sizeof(double) * 2 +
           row_start_.size() * sizeof(std::size_t) + entries_.size() * sizeof(Successor);
}

SolveResult value_iteration(const MdpModel& model, const SolveOptions& options) {
    const auto t0 = Clock::now();
    BellmanOperator op(model);
    SolveResult r = value_iteration(op, options);
    r.report.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
    return r;
}

SolveResult value_iteration(BellmanOperator& op, const SolveOptions& options) {
    if (!(options.tolerance > 0.0)) throw ContractError("tolerance must be > 0");
    if (options.max_sweeps < 1) throw ContractError("max_sweeps must be >= 1");
    const auto t0 = Clock::now();
    const std::size_t n = op.state_count();
    std::vector<double> v(n, 0.0);
    std::vector<double> next(n, 0.0);
    SolveResult out;

    for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
        op.prepare(v);
        double residual = 0.0;
        const auto ns = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) reduction(max : residual)
        for (std::int64_t si = 0; si < ns; ++si) {
            const auto s = static_cast<std::size_t>(si);
            next[s] = op.backup(s);
            residual = std::max(residual, std::abs(next[s] - v[s]));
        }
        v.swap(next);
        out.report.residual_history.push_back(residual);
        out.report.iterations = sweep;
        if (residual < options.tolerance) {
            out.report.converged = true;
            break;
        }
    }
    out.value.values = std::move(v);
    out.report.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
    return out;
}

Policy extract_policy(BellmanOperator& op, const ValueFunction& v) {
    op.prepare(v.values);
    Policy p;
    p.actions.resize(op.state_count());
    const auto ns = static_cast<std::int64_t>(op.state_count());
#pragma omp parallel for schedule(static)
    for (std::int64_t si = 0; si < ns; ++si) {
        std::size_t best = 0;
        op.backup(static_cast<std::size_t>(si), &best);
        p.actions[static_cast<std::size_t>(si)] = static_cast<int>(best) + 1;
    }
    return p;
}

Policy extract_policy(const MdpModel& model, const ValueFunction& v) {
    BellmanOperator op(model);
    return extract_policy(op, v);
}

std::vector<double> state_action_values(const MdpModel& model, const ValueFunction& v, std::size_t s) {
    if (s >= model.state_count()) throw BoundsError("state " + std::to_string(s) + " out of range");
    if (v.values.size() != model.state_count()) throw ContractError("value vector length does not match model");
    std::vector<double> out(model.action_count());
    std::vector<Successor> succ;
    for (std::size_t a = 0; a < model.action_count(); ++a) {
        model.successors(s, a, succ);
        double w = 0.0;
        for (const auto& e : succ) w += e.probability * -v.values[e.state];
        out[a] = -model.cost(s, a) + model.discount() * w;
    }
    return out;
}

std::vector<double> q_table(BellmanOperator& op, const ValueFunction& v) {
    op.prepare(v.values);
    const std::size_t A = op.action_count();
    std::vector<double> q(op.state_count() * A);
    const auto ns = static_cast<std::int64_t>(op.state_count());
#pragma omp parallel for schedule(static)
    for (std::int64_t si = 0; si < ns; ++si) {
        const auto s = static_cast<std::size_t>(si);
        for (std::size_t a = 0; a < A; ++a) q[s * A + a] = op.q(s, a);
    }
    return q;
}

double bellman_residual(const MdpModel& model, const ValueFunction& v) {
    BellmanOperator op(model);
    op.prepare(v.values);
    double r = 0.0;
    for (std::size_t s = 0; s < op.state_count(); ++s) r = std::max(r, std::abs(v.values[s] - op.backup(s)));
    return r;
}

ValueFunction evaluate_policy(const MdpModel& model, const Policy& policy, double tolerance, int max_sweeps) {
    if (policy.actions.size() != model.state_count()) throw ContractError("policy length does not match model");
    BellmanOperator op(model);
    std::vector<double> v(model.state_count(), 0.0);
    std::vector<double> next(v.size());
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        op.prepare(v);
        double residual = 0.0;
        for (std::size_t s = 0; s < v.size(); ++s) {
            const int a = policy.actions[s];
            if (a < 1 || static_cast<std::size_t>(a) > model.action_count()) {
                throw ContractError("policy action " + std::to_string(a) + " out of range");
            }
            next[s] = op.q(s, static_cast<std::size_t>(a - 1));
            residual = std::max(residual, std::abs(next[s] - v[s]));
        }
        v.swap(next);
        if (residual < tolerance) break;
    }
    return {std::move(v)};
}

void write_policy(std::ostream& os, const Policy& policy, const std::vector<std::uint32_t>& layout_digits) {
    os << "UAVMDP-POLICY 1\nlayout";
    for (auto d : layout_digits) os << ' ' << d;
    os << "\nstates " << policy.actions.size() << '\n';
    for (int a : policy.actions) os << a << '\n';
}

void write_policy_file(const std::string& path, const Policy& policy,
                       const std::vector<std::uint32_t>& layout_digits) {
    std::ofstream f(path);
    if (!f) throw ContractError("cannot write " + path);
    write_policy(f, policy, layout_digits);
}

PolicyFile read_policy(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "UAVMDP-POLICY 1") throw ValidationError("policy", "bad header");
    PolicyFile out;
    if (!std::getline(is, line)) throw ValidationError("policy.layout", "missing");
    {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag != "layout") throw ValidationError("policy.layout", "missing");
        std::uint32_t d;
        while (ls >> d) out.layout_digits.push_back(d);
    }
    std::size_t n = 0;
    if (!std::getline(is, line) || std::sscanf(line.c_str(), "states %zu", &n) != 1) {
        throw ValidationError("policy.states", "missing");
    }
    out.policy.actions.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        int a;
        if (!(is >> a)) throw ValidationError("policy.actions[" + std::to_string(i) + "]", "missing or malformed");
        out.policy.actions.push_back(a);
    }
    return out;
}

PolicyFile read_policy_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError(path, "cannot open");
    return read_policy(f);
}

void write_residual_csv(std::ostream& os, const SolveReport& report) {
    os << "sweep,residual\n";
    os.precision(17);
    for (std::size_t i = 0; i < report.residual_history.size(); ++i) {
        os << (i + 1) << ',' << report.residual_history[i] << '\n';
    }
}

}  // namespace fmdp
