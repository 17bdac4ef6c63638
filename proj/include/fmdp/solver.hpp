#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fmdp/mdp.hpp"

namespace fmdp {

/// Expected discounted cost-to-go, one entry per state.
struct ValueFunction {
    std::vector<double> values;
};

/// Greedy action per state. Ids are 1-based to match the mission action
/// tables; generic models use 1..A as well.
struct Policy {
    std::vector<int> actions;
};

struct SolveOptions {
    double tolerance = 1e-6;
    int max_sweeps = 10000;
};

struct SolveReport {
    int iterations = 0;
    std::vector<double> residual_history;
    double wall_time = 0.0;
    bool converged = false;
};

struct SolveResult {
    ValueFunction value;
    SolveReport report;
};

/// Evaluates Q(s,a) = J(s,a) + gamma * E[V(s')] for a fixed V.
///
/// Factored models are handled by contracting V one digit at a time into a
/// table indexed by selector key; the per-(s,a) key and cost are cached at
/// construction. Other models get an explicit sparse transition cache.
class BellmanOperator {
public:
    explicit BellmanOperator(const MdpModel& model);

    const MdpModel& model() const noexcept { return *model_; }
    std::size_t state_count() const noexcept { return states_; }
    std::size_t action_count() const noexcept { return actions_; }
    bool factored() const noexcept { return factored_; }

    /// Must be called with the current V before q()/backup().
    void prepare(const std::vector<double>& v);

    double q(std::size_t s, std::size_t a) const;
    /// min_a Q(s,a); `best` receives the lowest minimizing action (0-based).
    double backup(std::size_t s, std::size_t* best = nullptr) const;

    /// Bytes held by cached costs, keys / transitions and the expectation table.
    std::size_t storage_bytes() const noexcept;

private:
    void contract(const std::vector<double>& v);

    const MdpModel* model_;
    std::size_t states_;
    std::size_t actions_;
    double gamma_;
    bool factored_ = false;
    std::vector<double> costs_;  // s*A + a

    // factored path
    std::vector<std::uint32_t> keys_;
    std::vector<double> table_;
    std::vector<double> scratch_;

    // explicit path
    std::vector<std::size_t> row_start_;
    std::vector<Successor> entries_;
    const std::vector<double>* v_ = nullptr;
};

/// Synchronous value iteration from V = 0 until the sup-norm change drops
/// below options.tolerance or max_sweeps is reached.
SolveResult value_iteration(const MdpModel& model, const SolveOptions& options = {});
SolveResult value_iteration(BellmanOperator& op, const SolveOptions& options = {});

/// argmin_a Q(s,a) per state, ties to the lowest action id.
Policy extract_policy(const MdpModel& model, const ValueFunction& v);
Policy extract_policy(BellmanOperator& op, const ValueFunction& v);

/// Return-form scores -J(s,a) + gamma * sum P(s'|s,a) W(s') with W = -V.
/// Entry a-1 belongs to action id a.
std::vector<double> state_action_values(const MdpModel& model, const ValueFunction& v, std::size_t s);

/// Q(s,a) for every state and action, row-major (s*A + a).
std::vector<double> q_table(BellmanOperator& op, const ValueFunction& v);

/// sup_s |V(s) - min_a Q(s,a)|.
double bellman_residual(const MdpModel& model, const ValueFunction& v);

/// Iterative evaluation of a fixed policy to tolerance.
ValueFunction evaluate_policy(const MdpModel& model, const Policy& policy, double tolerance = 1e-10,
                              int max_sweeps = 100000);

/// Textual policy file: a "UAVMDP-POLICY 1" line, "layout <radices...>",
/// "states <N>", then one action id per line.
void write_policy(std::ostream& os, const Policy& policy, const std::vector<std::uint32_t>& layout_digits);
void write_policy_file(const std::string& path, const Policy& policy,
                       const std::vector<std::uint32_t>& layout_digits);

struct PolicyFile {
    std::vector<std::uint32_t> layout_digits;
    Policy policy;
};
/// Throws ValidationError on a malformed file.
PolicyFile read_policy(std::istream& is);
PolicyFile read_policy_file(const std::string& path);

/// "sweep,residual" CSV, sweeps numbered from 1.
void write_residual_csv(std::ostream& os, const SolveReport& report);

}  // namespace fmdp
