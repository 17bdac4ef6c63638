#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fmdp/decomposer.hpp"
#include "fmdp/solver.hpp"
#include "fmdp/util.hpp"

namespace fmdp {

/// S = S_1 x ... x S_n, joint actions A_1 x ... x A_n (first factor most
/// significant), J = sum J_i, P = prod P_i. An optional coupling term adds a
/// cross-factor cost and breaks the independence assumptions on purpose.
class ProductMdp final : public MdpModel {
public:
    using Coupling = std::function<double(const std::vector<std::size_t>& s, const std::vector<std::size_t>& a)>;

    /// Throws ContractError if the factors disagree on the discount.
    explicit ProductMdp(std::vector<std::shared_ptr<const MdpModel>> factors, Coupling coupling = {});

    std::size_t state_count() const override { return states_; }
    std::size_t action_count() const override { return actions_; }
    double discount() const override { return gamma_; }
    double cost(std::size_t s, std::size_t a) const override;
    void successors(std::size_t s, std::size_t a, std::vector<Successor>& out) const override;
    const FactoredDynamics* factored() const override { return &dynamics_; }
    std::uint64_t factored_key(std::size_t s, std::size_t a) const override;

    const std::vector<std::shared_ptr<const MdpModel>>& factors() const noexcept { return factors_; }
    bool coupled() const noexcept { return static_cast<bool>(coupling_); }

    std::vector<std::size_t> split_state(std::size_t s) const;
    std::vector<std::size_t> split_action(std::size_t a) const;
    std::size_t join_state(const std::vector<std::size_t>& parts) const;
    std::size_t join_action(const std::vector<std::size_t>& parts) const;

private:
    std::vector<std::shared_ptr<const MdpModel>> factors_;
    Coupling coupling_;
    std::size_t states_ = 1;
    std::size_t actions_ = 1;
    double gamma_ = 0.0;
    FactoredDynamics dynamics_;
};

ProductMdp build_product_mdp(std::vector<std::shared_ptr<const MdpModel>> factors);

struct RandomMdpSpec {
    std::size_t min_states = 2;
    std::size_t max_states = 20;
    std::size_t min_actions = 2;
    std::size_t max_actions = 4;
    double cost_max = 10.0;
    double discount = 0.9;
};

/// Flat Dirichlet(1) probability vector.
std::vector<double> dirichlet_row(Rng& rng, std::size_t n);
/// Costs uniform on [0, cost_max], Dirichlet rows over all successors.
std::shared_ptr<const TabularMdp> random_tabular_mdp(Rng& rng, std::size_t states, std::size_t actions,
                                                     double discount, double cost_max = 10.0);
/// Factor sizes drawn from the ranges in `spec`.
ProductMdp random_product(std::uint64_t seed, std::size_t factor_count, const RandomMdpSpec& spec = {});

struct Mismatch {
    std::uint64_t state;
    int action_a;
    int action_b;
};

struct PolicyComparisonReport {
    std::uint64_t total_states = 0;
    std::uint64_t matching = 0;
    std::uint64_t mismatching = 0;
    double match_percent = 0.0;
    std::uint64_t exact_matching = 0;  // raw action-id equality
    bool tie_aware = false;
    double tie_tolerance = 0.0;
    std::vector<Mismatch> mismatch_samples;  // at most kMaxSamples
    std::optional<std::uint64_t> seed;
    bool assumption_violation = false;

    static constexpr std::size_t kMaxSamples = 100;
};

/// Equality counts of two policies over the same state space. With a Q
/// table (row-major, `actions` wide) a differing pair still counts as a match
/// when the two actions' Q values are within `tie_tolerance`.
/// Throws ContractError if the policies differ in length.
PolicyComparisonReport compare_policies(const Policy& a, const Policy& b, const std::vector<double>* q = nullptr,
                                        std::size_t actions = 0, double tie_tolerance = 1e-9);
/// Value-aware comparison using the model's Bellman backup under `v`.
PolicyComparisonReport compare_policies(const Policy& a, const Policy& b, const MdpModel& model,
                                        const ValueFunction& v, double tie_tolerance = 1e-9);

/// Solves each factor alone, concatenates the local policies and compares
/// with the brute-force global solve (tie-aware). Throws CapacityError when
/// the product exceeds `cap` states.
PolicyComparisonReport verify_policy_equivalence(const ProductMdp& product, double tolerance = 1e-9,
                                                 std::uint64_t cap = 100'000);

/// max_s |V*(s) - sum_i V_i*(s_i)|.
double verify_additive_value(const ProductMdp& product, double tolerance = 1e-9, std::uint64_t cap = 100'000);

struct NextStateDiff {
    MissionState state;
    int action_combined = 0;
    int action_global = 0;
    std::vector<std::pair<MissionState, double>> successors_combined;
    std::vector<std::pair<MissionState, double>> successors_global;
    bool identical = false;
};

NextStateDiff compare_next_state(const MissionState& s, const Policy& combined, const Policy& global,
                                 const MissionModel& model);

struct ComplexityReduction {
    double global_proxy = 0.0;
    double decomposed_proxy = 0.0;
    double ratio = 0.0;
};

/// |S|^2 against sum |S_i|^2.
ComplexityReduction complexity_reduction(const std::vector<std::uint64_t>& sub_counts, std::uint64_t global_count);
ComplexityReduction complexity_reduction(const DecompositionPlan& plan, std::uint64_t global_count);

nlohmann::json report_to_json(const PolicyComparisonReport& r);
/// "category,count,percent" rows for match and mismatch.
void write_agreement_csv(std::ostream& os, const PolicyComparisonReport& r);

}  // namespace fmdp
