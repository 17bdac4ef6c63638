#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fmdp {

struct Successor {
    std::size_t state = 0;
    double probability = 0.0;
};

/// Dense row-stochastic matrix, row-major.
struct Kernel {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> p;

    Kernel() = default;
    Kernel(std::size_t r, std::size_t c) : rows(r), cols(c), p(r * c, 0.0) {}

    static Kernel identity(std::size_t n);

    double& at(std::size_t r, std::size_t c) { return p[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return p[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {p.data() + r * cols, cols}; }
};

/// Rows whose entries leave [0,1] or whose sum differs from 1 by more than `tol`.
std::vector<std::size_t> non_stochastic_rows(const Kernel& k, double tol = 1e-9);

/// Transition structure in which every next-state digit is either set
/// deterministically or drawn independently from one row of a per-digit
/// kernel. A model exposing this lets the solver evaluate expectations by
/// successive contractions instead of enumerating joint successors.
///
/// For each (s, a) the model supplies a key: the mixed-radix index of the
/// per-digit selectors, where a deterministic digit contributes its next
/// value (radix = digit radix) and a stochastic digit contributes its kernel
/// row (radix = kernel rows).
struct FactoredDynamics {
    std::vector<std::uint32_t> radices;           // next-state digits, most significant first
    std::vector<std::optional<Kernel>> kernels;   // nullopt for deterministic digits

    /// Radix of each selector position.
    std::vector<std::uint64_t> selector_dims() const;
    std::uint64_t selector_count() const;
};

/// Finite discounted-cost MDP with states 0..N-1 and actions 0..A-1.
/// Implementations are immutable after construction and safe to query
/// concurrently.
class MdpModel {
public:
    virtual ~MdpModel() = default;

    virtual std::size_t state_count() const = 0;
    virtual std::size_t action_count() const = 0;
    virtual double discount() const = 0;
    virtual double cost(std::size_t s, std::size_t a) const = 0;
    /// Replaces `out` with the positive-probability successors of (s, a).
    virtual void successors(std::size_t s, std::size_t a, std::vector<Successor>& out) const = 0;

    virtual const FactoredDynamics* factored() const { return nullptr; }
    /// Selector key of (s, a); only meaningful when factored() is non-null.
    virtual std::uint64_t factored_key(std::size_t s, std::size_t a) const;
};

/// Explicit model: dense cost table plus one sparse row per (s, a).
class TabularMdp final : public MdpModel {
public:
    /// `transitions[s][a]` lists successors; `costs[s][a]` the stage cost.
    TabularMdp(std::vector<std::vector<std::vector<Successor>>> transitions,
               std::vector<std::vector<double>> costs, double discount);

    /// Dense form: probs[s][a][s'].
    static TabularMdp from_dense(const std::vector<std::vector<std::vector<double>>>& probs,
                                 const std::vector<std::vector<double>>& costs, double discount);

    std::size_t state_count() const override { return states_; }
    std::size_t action_count() const override { return actions_; }
    double discount() const override { return discount_; }
    double cost(std::size_t s, std::size_t a) const override { return costs_[s * actions_ + a]; }
    void successors(std::size_t s, std::size_t a, std::vector<Successor>& out) const override;

    double probability(std::size_t s, std::size_t a, std::size_t next) const;

private:
    std::size_t states_;
    std::size_t actions_;
    double discount_;
    std::vector<double> costs_;
    std::vector<std::size_t> row_start_;  // size N*A + 1
    std::vector<Successor> entries_;
};

struct ModelIssue {
    std::size_t state;
    std::size_t action;
    std::string problem;
};

/// Every (s, a) whose successor mass differs from 1 by more than `tol`, has a
/// negative or out-of-range entry, or whose cost is negative or non-finite.
std::vector<ModelIssue> check_model(const MdpModel& model, double tol = 1e-9);

}  // namespace fmdp
