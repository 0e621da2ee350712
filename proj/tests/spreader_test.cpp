#include "ecs/spreader.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ecs;
using namespace ecs::spreader;

namespace {

Allocation toy() { return Allocation::plan_test_mode({{1, 1}, {2, 2}}, 1, 2); }

// Independent certificate: partial sums of a_m + (m^2 + 1)/2^m for m in [M, 200].
Rational partial_certificate(const WeightSeries& w, std::uint64_t M) {
    Rational s = 0;
    for (std::uint64_t m = M; m <= 200; ++m) s += w.term(m) + Rational(BigInt(m) * m + 1, pow2(m));
    return s;
}

}  // namespace

TEST(ChooseM0, AllZeroSeriesIsEight) {
    const auto w = WeightSeries::zero();
    EXPECT_EQ(choose_m0(w), 8U);
    // closed form against brute-force partial sums
    for (std::uint64_t M = 0; M <= 20; ++M) {
        const Rational diff = m0_certificate(w, M) - partial_certificate(w, M);
        ASSERT_GE(diff, 0);
        ASSERT_LT(diff, Rational(1, pow2(150)));
    }
    std::uint64_t first = 0;
    while (partial_certificate(w, first) > 1) ++first;
    EXPECT_EQ(first, 8U);
    EXPECT_GT(Rational(2 * 49 + 28 + 6, 128), 1);  // M = 7 still over budget
}

TEST(ChooseM0, TinyGeometricMatchesZero) {
    const auto w = WeightSeries::geometric(Rational(1, 1 << 20));
    EXPECT_EQ(choose_m0(w), choose_m0(WeightSeries::zero()));
}

TEST(ChooseM0, InverseTriangularCertificateRechecks) {
    const auto w = WeightSeries::inverse_triangular();
    const auto m0 = choose_m0(w);
    EXPECT_LE(partial_certificate(w, m0), 1);
    // the tail bound dominates the independent partial sum
    EXPECT_LE(partial_certificate(w, m0), m0_certificate(w, m0));
    EXPECT_GT(m0_certificate(w, m0 - 1), 1);
}

TEST(WeightSeries, TailBoundsDominateSpotSums) {
    for (const auto& w : {WeightSeries::zero(), WeightSeries::inverse_triangular(), WeightSeries::geometric(Rational(1, 3)),
                          WeightSeries::geometric(Rational(9, 10))}) {
        for (std::uint64_t M : {1, 2, 5, 10, 40, 100}) {
            Rational s = 0;
            for (std::uint64_t m = M; m <= M + 64; ++m) s += w.term(m);
            ASSERT_LE(s, w.tail_bound(M)) << w.name() << " M=" << M;
        }
        ASSERT_LE(w.tail_bound(1000), Rational(1, 100)) << w.name();
    }
    EXPECT_THROW(WeightSeries::geometric(Rational(1)), std::invalid_argument);
    EXPECT_THROW(WeightSeries::from_preset("nope"), std::invalid_argument);
}

TEST(Allocation, ToyHandSimulation) {
    const auto a = toy();
    EXPECT_EQ(a.first_terms(1), (std::vector<std::uint64_t>{0}));
    EXPECT_EQ(a.first_terms(2), (std::vector<std::uint64_t>{1, 3}));
    EXPECT_EQ(a.cumulative(2), 3U);
    EXPECT_EQ(a.source_index(0), 0U);
    EXPECT_EQ(a.source_index(3), 2U);
    EXPECT_EQ(a.source_index(5), 1U);
    EXPECT_EQ(a.horizon(), std::numeric_limits<std::uint64_t>::max());
}

TEST(Allocation, FullOccupationAtOneLevel) {
    auto a = Allocation::plan_test_mode({{1, 2}}, 1, 1);
    EXPECT_EQ(a.source_index(4), 0U);
    EXPECT_EQ(a.source_index(7), 1U);
}

TEST(Allocation, MatchesLiteralSplittingProcess) {
    const std::map<unsigned, std::uint64_t> counts{{2, 1}, {3, 3}, {4, 2}, {5, 7}, {6, 0}, {7, 4}};
    const auto a = Allocation::plan_test_mode(counts, 2, 7);
    const auto sim = oracle::simulate_splitting(2, 7, counts);
    for (unsigned m = 2; m <= 7; ++m) ASSERT_EQ(a.first_terms(m), sim.first_terms.at(m)) << "level " << m;

    const auto w = WeightSeries::inverse_triangular();
    const auto m0 = static_cast<unsigned>(choose_m0(w));
    const auto b = Allocation::plan(w, m0, 16);
    std::map<unsigned, std::uint64_t> wc;
    for (unsigned m = m0; m <= 16; ++m) wc[m] = level_count(w, m);
    const auto sim2 = oracle::simulate_splitting(m0, 16, wc);
    for (unsigned m = m0; m <= 16; ++m) ASSERT_EQ(b.first_terms(m), sim2.first_terms.at(m)) << "level " << m;
}

TEST(Allocation, InvariantsForPresets) {
    for (const auto& w : {WeightSeries::zero(), WeightSeries::inverse_triangular(), WeightSeries::geometric(Rational(1, 2))}) {
        const auto m0 = static_cast<unsigned>(choose_m0(w));
        const auto a = Allocation::plan(w, m0, m0 + 10);
        EXPECT_LE(a.budget_used(), 1) << w.name();
        for (unsigned m = a.m0(); m <= a.max_level(); ++m) {
            EXPECT_EQ(a.count(m), level_count(w, m));
            const Rational exact = w.term(m) * Rational(pow2(m)) + Rational(BigInt(m) * m);
            EXPECT_GE(Rational(BigInt(a.count(m))), exact);
            EXPECT_LT(Rational(BigInt(a.count(m))), exact + 1);
            for (auto first : a.first_terms(m)) ASSERT_LT(first, std::uint64_t{1} << m);
        }
    }
}

TEST(Allocation, PartitionExhaustive) {
    const auto w = WeightSeries::inverse_triangular();
    auto a = Allocation::plan(w, static_cast<unsigned>(choose_m0(w)), 8);
    const std::uint64_t H = std::uint64_t{1} << 16;
    a.extend_to_horizon(H);
    // multiplicity of i over all progressions, computed from first terms only
    std::vector<std::uint32_t> hits(H, 0);
    for (unsigned m = a.m0(); m <= a.max_level(); ++m) {
        const std::uint64_t d = std::uint64_t{1} << m;
        for (auto first : a.first_terms(m)) {
            for (std::uint64_t p = first; p < H; p += d) ++hits[p];
        }
    }
    for (std::uint64_t i = 0; i < H; ++i) ASSERT_EQ(hits[i], 1U) << "position " << i;
}

TEST(Allocation, LeastUncoveredProgress) {
    const auto w = WeightSeries::inverse_triangular();
    const auto m0 = static_cast<unsigned>(choose_m0(w));
    auto a = Allocation::plan(w, m0, m0);
    std::uint64_t previous = a.horizon();
    std::uint64_t strict = 0;
    while (a.horizon() < 4096) {
        a.extend_to_level(a.max_level() + 1);
        ASSERT_GE(a.horizon(), previous);
        if (a.horizon() > previous) ++strict;
        previous = a.horizon();
    }
    EXPECT_EQ(strict, a.max_level() - m0);  // every weighted level makes progress
}

TEST(Allocation, CertificateGuardAndErrors) {
    const auto w = WeightSeries::zero();
    EXPECT_THROW(Allocation::plan(w, 7, 10), std::invalid_argument);
    auto stalled = Allocation::plan_test_mode({{1, 1}}, 1, 1);
    EXPECT_THROW(stalled.source_index(1), UncoveredPosition);
    EXPECT_THROW(Allocation::plan_test_mode({{1, 3}}, 1, 1), std::logic_error);
}

TEST(Allocation, ImportValidation) {
    EXPECT_NO_THROW(Allocation::from_first_terms(1, {{0}, {1, 3}}));
    EXPECT_THROW(Allocation::from_first_terms(1, {{0}, {2}}), std::invalid_argument);   // 2 = 0 mod 2
    EXPECT_THROW(Allocation::from_first_terms(1, {{0}, {5}}), std::invalid_argument);   // first term >= 4
    EXPECT_THROW(Allocation::from_first_terms(1, {{0, 0}}), std::invalid_argument);
    const auto a = Allocation::from_first_terms(1, {{0}, {1}});
    EXPECT_EQ(a.horizon(), 3U);
}

TEST(Spread, Examples) {
    auto a = toy();
    EXPECT_EQ(spread(a, BitString::from_string("101"), 8).to_string(), "10111011");
    auto b = Allocation::plan_test_mode({{1, 2}}, 1, 1);
    EXPECT_EQ(spread(b, BitString::from_string("10"), 6).to_string(), "101010");
    const auto w = WeightSeries::inverse_triangular();
    auto c = Allocation::plan(w, static_cast<unsigned>(choose_m0(w)), 10);
    EXPECT_EQ(spread(c, BitString(5000, false), 3000).count_ones(), 0U);
    EXPECT_THROW(spread(a, BitString::from_string("10"), 8), std::invalid_argument);
}

TEST(Spread, RandomSourceIsDeterministic) {
    const auto w = WeightSeries::inverse_triangular();
    auto a = Allocation::plan(w, static_cast<unsigned>(choose_m0(w)), 8);
    RandomSource r1(5);
    RandomSource r2(5);
    EXPECT_EQ(spread(a, r1, 10000), spread(a, r2, 10000));
}

TEST(RecoverPrefix, ToyExample) {
    const auto a = toy();
    const auto omega = BitString::from_string("10111011");
    EXPECT_EQ(recover_prefix(a, omega.window(1, 4), 1, 2).to_string(), "101");
}

TEST(RecoverPrefix, TamperedWindowIsRejected) {
    const auto a = toy();
    auto w = BitString::from_string("10111011").window(0, 4);  // tau_0 at offsets 0 and 2
    w.flip(2);
    EXPECT_THROW(recover_prefix(a, w, 0, 2), InconsistentWindow);
    EXPECT_THROW(recover_prefix(a, BitString(3), 0, 2), std::invalid_argument);
}

TEST(RecoverPrefix, RoundTripProperty) {
    const auto w = WeightSeries::inverse_triangular();
    const auto m0 = static_cast<unsigned>(choose_m0(w));
    auto a = Allocation::plan(w, m0, 12);
    std::mt19937_64 gen(99);
    RandomSource rs(17);
    const std::uint64_t L = 1 << 15;
    const BitString tau = rs.bits(required_source_bits(a, L));
    const BitString omega = spread(a, tau, L);
    for (int trial = 0; trial < 1000; ++trial) {
        const unsigned m = m0 + static_cast<unsigned>(gen() % (13 - m0));
        const std::uint64_t width = std::uint64_t{1} << m;
        const std::uint64_t k = gen() % (L - width + 1);
        const auto prefix = recover_prefix(a, omega.window(k, width), k % width, m);
        ASSERT_EQ(prefix, tau.window(0, a.cumulative(m)));
    }
}

TEST(WindowCoverage, ToyExhaustive) {
    // small levels let the exhaustive check run at m <= 6
    const std::map<unsigned, std::uint64_t> counts{{2, 1}, {3, 2}, {4, 3}, {5, 4}, {6, 5}, {7, 6}, {8, 16}};
    auto a = Allocation::plan_test_mode(counts, 2, 8);
    a.extend_to_horizon((1 << 12) + 64);
    for (unsigned m = 2; m <= 6; ++m) {
        for (std::uint64_t k = 0; k < (1U << 12); ++k) {
            const auto c = check_window_coverage(a, k, m);
            ASSERT_TRUE(c.ok()) << "k=" << k << " m=" << m;
        }
    }
}

TEST(WindowCoverage, InverseTriangularSampled) {
    const auto w = WeightSeries::inverse_triangular();
    const auto m0 = static_cast<unsigned>(choose_m0(w));
    auto a = Allocation::plan(w, m0, 14);
    a.extend_to_horizon(1 << 16);
    std::mt19937_64 gen(4);
    for (unsigned m = m0; m <= 14; ++m) {
        const std::uint64_t width = std::uint64_t{1} << m;
        for (int s = 0; s < 200; ++s) {
            const std::uint64_t k = gen() % ((1 << 16) - width + 1);
            ASSERT_TRUE(check_window_coverage(a, k, m).ok()) << "k=" << k << " m=" << m;
        }
    }
}
