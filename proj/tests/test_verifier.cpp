#include <doctest.h>

#include <cmath>
#include <map>
#include <memory>

#include "fmdp/errors.hpp"
#include "fmdp/verifier.hpp"
#include "oracles.hpp"

using namespace fmdp;

namespace {

std::shared_ptr<const TabularMdp> two_state(double cheap, double dear, double gamma = 0.9) {
    // Action 0 costs `cheap`, action 1 costs `dear`; both keep the state.
    const std::vector<std::vector<std::vector<double>>> p{{{1, 0}, {1, 0}}, {{0, 1}, {0, 1}}};
    return std::make_shared<const TabularMdp>(TabularMdp::from_dense(p, {{cheap, dear}, {cheap, dear}}, gamma));
}

}  // namespace

TEST_SUITE("verifier") {
    TEST_CASE("product structure") {
        Rng rng(5);
        auto a = random_tabular_mdp(rng, 3, 2, 0.9);
        auto b = random_tabular_mdp(rng, 4, 3, 0.9);
        const auto prod = build_product_mdp({a, b});
        CHECK(prod.state_count() == 12);
        CHECK(prod.action_count() == 6);
        CHECK(prod.discount() == 0.9);

        std::vector<Successor> out;
        for (std::size_t s = 0; s < 12; ++s) {
            for (std::size_t u = 0; u < 6; ++u) {
                const auto sp = prod.split_state(s);
                const auto ap = prod.split_action(u);
                CHECK(prod.join_state(sp) == s);
                CHECK(prod.join_action(ap) == u);
                CHECK(prod.cost(s, u) == doctest::Approx(a->cost(sp[0], ap[0]) + b->cost(sp[1], ap[1])));
                prod.successors(s, u, out);
                std::map<std::size_t, double> got;
                for (const auto& e : out) got[e.state] += e.probability;
                for (std::size_t n = 0; n < 12; ++n) {
                    const auto np = prod.split_state(n);
                    const double want = a->probability(sp[0], ap[0], np[0]) * b->probability(sp[1], ap[1], np[1]);
                    CHECK(got[n] == doctest::Approx(want).epsilon(1e-12));
                }
            }
        }
    }

    TEST_CASE("factors must share the discount") {
        CHECK_THROWS_AS(build_product_mdp({two_state(1, 2, 0.9), two_state(1, 2, 0.8)}), ContractError);
    }

    TEST_CASE("independent products agree completely") {
        for (std::uint64_t seed = 1; seed <= 30; ++seed) {
            RandomMdpSpec spec;
            spec.max_states = 8;
            spec.max_actions = 3;
            const auto prod = random_product(seed, 2 + seed % 2, spec);
            const auto r = verify_policy_equivalence(prod);
            CHECK(r.total_states == prod.state_count());
            CHECK(r.match_percent == 100.0);
            CHECK_FALSE(r.assumption_violation);
            CHECK(verify_additive_value(prod) < 1e-6);
        }
    }

    TEST_CASE("additive value on a hand product") {
        // V_i = c/(1-gamma) for the cheap action; the sum is the product value.
        const auto prod = build_product_mdp({two_state(1, 2), two_state(3, 5)});
        CHECK(verify_additive_value(prod, 1e-10) < 1e-7);
    }

    TEST_CASE("coupled product is flagged") {
        const ProductMdp prod({two_state(1, 2), two_state(1, 2)},
                              [](const std::vector<std::size_t>&, const std::vector<std::size_t>& a) {
                                  return a[0] == 0 && a[1] == 0 ? 10.0 : 0.0;
                              });
        const auto r = verify_policy_equivalence(prod);
        CHECK(r.assumption_violation);
        CHECK(r.match_percent == 0.0);
        CHECK(r.mismatch_samples.size() == 4);
        CHECK(verify_additive_value(prod) > 1.0);
    }

    TEST_CASE("policy comparison counts") {
        Policy a;
        a.actions.assign(100, 1);
        CHECK(compare_policies(a, a).match_percent == 100.0);

        Policy b = a;
        for (std::size_t i = 0; i < 10; ++i) b.actions[i * 10] = 2;
        const auto ab = compare_policies(a, b);
        const auto ba = compare_policies(b, a);
        CHECK(ab.match_percent == doctest::Approx(90.0));
        CHECK(ab.mismatching == 10);
        CHECK(ab.mismatch_samples.size() == 10);
        CHECK(ab.match_percent == ba.match_percent);
        CHECK(ab.matching == ba.matching);

        Policy c;
        c.actions.assign(99, 1);
        CHECK_THROWS_AS(compare_policies(a, c), ContractError);
    }

    TEST_CASE("tie-aware comparison") {
        Policy a, b;
        a.actions = {1, 1};
        b.actions = {2, 2};
        const std::vector<double> q{5.0, 5.0, 5.0, 6.0};
        const auto r = compare_policies(a, b, &q, 2, 1e-9);
        CHECK(r.matching == 1);
        CHECK(r.exact_matching == 0);
        CHECK(r.tie_aware);
    }

    TEST_CASE("one-step successor comparison") {
        const MissionModel model(default_config(3));
        const auto s = [] {
            MissionState x;
            x.fault = 1;
            x.range_flags = {1, 0, 1};
            x.goal_priorities = {0, 2, 1};
            x.location = 1;
            x.commitment = 0;
            x.threat = 2;
            x.nav_mode = 1;
            return x;
        }();
        CHECK(to_string(s) == "[1 1 0 1 0 2 1 1 0 2 1]");
        Policy p;
        p.actions.assign(model.state_count(), 3);
        const auto same = compare_next_state(s, p, p, model);
        CHECK(same.identical);
        CHECK(same.successors_combined.size() == same.successors_global.size());

        Policy q = p;
        q.actions[encode_state(s, model.layout()).value] = 1;
        const auto diff = compare_next_state(s, q, p, model);
        CHECK_FALSE(diff.identical);
        CHECK(diff.action_combined == 1);
        CHECK(diff.action_global == 3);

        Policy shorter;
        shorter.actions.assign(10, 1);
        CHECK_THROWS_AS(compare_next_state(s, shorter, p, model), ContractError);
    }

    TEST_CASE("complexity reduction") {
        const auto three = complexity_reduction({4608, 4608, 4608}, 331776);
        CHECK(three.global_proxy == doctest::Approx(331776.0 * 331776.0));
        CHECK(three.ratio == doctest::Approx(1728.0));
        CHECK(complexity_reduction({4608}, 4608).ratio == doctest::Approx(1.0));
        CHECK(complexity_reduction({50, 50}, 100).ratio == doctest::Approx(2.0));
    }

    TEST_CASE("report serialization") {
        Policy a, b;
        a.actions = {1, 2, 3, 4};
        b.actions = {1, 2, 3, 1};
        const auto r = compare_policies(a, b);
        const auto j = report_to_json(r);
        CHECK(j["matching"] == 3);
        CHECK(j["mismatch_samples"].size() == 1);
        std::ostringstream os;
        write_agreement_csv(os, r);
        CHECK(os.str() == "category,count,percent\nmatch,3,75\nmismatch,1,25\n");
    }
}
