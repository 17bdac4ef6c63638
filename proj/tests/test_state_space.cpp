#include <doctest.h>

#include "fmdp/errors.hpp"
#include "fmdp/state_space.hpp"
#include "oracles.hpp"

using namespace fmdp;

namespace {

StateLayout one_goal() { return StateLayout::make(8, 1, 8, 3, 2); }

MissionState make(int f, int r, int g, int l, int c, int t, int m) {
    return MissionState{f, {static_cast<std::uint8_t>(r)}, {static_cast<std::uint8_t>(g)}, l, c, t, m};
}

}  // namespace

TEST_SUITE("state_space") {
    TEST_CASE("state counts for one, two and three goals") {
        CHECK(state_count(StateLayout::make(8, 1, 8, 3, 2)) == 4608);
        CHECK(state_count(StateLayout::make(8, 2, 8, 3, 2)) == 41472);
        CHECK(state_count(StateLayout::make(8, 3, 8, 3, 2)) == 331776);
    }

    TEST_CASE("exact count agrees with the 128-bit oracle up to ten goals") {
        for (int g = 1; g <= 10; ++g) {
            CAPTURE(g);
            CHECK(state_count_exact(StateLayout::make(8, g, 8, 3, 2)).str() == oracle::state_count(8, g, 8, 3, 2));
        }
        CHECK(state_count_exact(StateLayout::make(8, 4, 8, 3, 2)) == 2488320);
    }

    TEST_CASE("count ratio between consecutive goal counts") {
        for (int g = 1; g < 10; ++g) {
            const BigCount a = state_count_exact(StateLayout::make(8, g, 8, 3, 2));
            const BigCount b = state_count_exact(StateLayout::make(8, g + 1, 8, 3, 2));
            CHECK(b * (g + 1) == a * 6 * (g + 2));
        }
    }

    TEST_CASE("64-bit count refuses to overflow") {
        CHECK_THROWS_AS(state_count(StateLayout::make(8, 30, 8, 3, 2)), CapacityError);
    }

    TEST_CASE("layout rejects non-positive counts") {
        CHECK_THROWS_AS(StateLayout::make(0, 1, 8, 3, 2), ValidationError);
        CHECK_THROWS_AS(StateLayout::make(8, 0, 8, 3, 2), ValidationError);
        const auto L = one_goal();
        CHECK(L.range_levels() == 2);
        CHECK(L.priority_levels() == 3);
        CHECK(L.commitment_levels() == 2);
    }

    TEST_CASE("encode extremes") {
        const auto L = one_goal();
        CHECK(encode_state(make(1, 0, 0, 0, 0, 0, 0), L).value == 0);
        CHECK(encode_state(make(1, 0, 0, 0, 0, 0, 1), L).value == 1);
        CHECK(encode_state(make(8, 1, 2, 7, 1, 2, 1), L).value == 4607);
        CHECK(decode_state(StateIndex{0}, L) == minimal_state(L));
        CHECK(decode_state(StateIndex{4607}, L) == make(8, 1, 2, 7, 1, 2, 1));
    }

    TEST_CASE("encode matches the oracle digit order") {
        const ModelConfig cfg = [] {
            ModelConfig c;
            c.layout = StateLayout::make(8, 3, 8, 3, 2);
            return c;
        }();
        Rng rng(7);
        for (int i = 0; i < 200; ++i) {
            const auto s = oracle::random_state(rng, cfg.layout);
            CHECK(encode_state(s, cfg.layout).value == oracle::index_of(oracle::digits(s), cfg));
        }
    }

    TEST_CASE("out-of-range fields are named") {
        const auto L = one_goal();
        try {
            encode_state(make(9, 0, 3, 0, 0, 0, 0), L);
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            const auto& v = e.violations();
            REQUIRE(v.size() == 2);
            CHECK(v[0].rfind("fault", 0) == 0);
            CHECK(v[1].rfind("goal_priorities[0]", 0) == 0);
        }
        MissionState wrong_len = make(1, 0, 0, 0, 0, 0, 0);
        wrong_len.range_flags.push_back(0);
        CHECK_THROWS_AS(encode_state(wrong_len, L), ValidationError);
        CHECK_THROWS_AS(decode_state(StateIndex{4608}, L), BoundsError);
    }

    TEST_CASE("enumeration yields every index once, in order") {
        const auto L = one_goal();
        std::uint64_t expected = 0;
        for (const auto& [idx, s] : enumerate_states(L)) {
            REQUIRE(idx.value == expected);
            REQUIRE(encode_state(s, L).value == expected);
            ++expected;
        }
        CHECK(expected == 4608);
    }

    TEST_CASE("enumeration cap") {
        CHECK_THROWS_AS(enumerate_states(StateLayout::make(8, 3, 8, 3, 2), 1000), CapacityError);
    }
}
