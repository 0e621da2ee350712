#include "ecs/forbidden.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <map>
#include <set>

using namespace ecs;
using namespace ecs::forbidden;

namespace {

BitString bs(const std::string& s) { return BitString::from_string(s); }

// Exact miss probability from Pascal's triangle, independent of binom().
Rational pascal_miss(std::size_t pool, std::size_t d, std::size_t s, const std::vector<std::vector<BigInt>>& t) {
    if (s > pool - d) return 0;
    return Rational(t[pool - d][s], t[pool][s]);
}

}  // namespace

TEST(Substrings, Examples) {
    EXPECT_EQ(distinct_substrings(bs("0001011100"), 3), 8U);  // de Bruijn: every 3-bit string once
    EXPECT_EQ(distinct_substrings(bs("0000"), 2), 1U);
    EXPECT_EQ(distinct_substrings(bs("0101"), 4), 1U);
    EXPECT_THROW(distinct_substrings(bs("01"), 3), std::invalid_argument);
    EXPECT_EQ(distinct_blocks(bs("010101"), 2), 1U);
    EXPECT_THROW(distinct_blocks(bs("01010"), 2), std::invalid_argument);
}

TEST(Substrings, AgreeWithStringOracle) {
    RandomSource rs(8);
    for (int t = 0; t < 300; ++t) {
        const std::size_t len = 1 + rs.uniform_below(std::uint64_t{120});
        const BitString x = rs.bits(len);
        const std::size_t n = 1 + rs.uniform_below(std::uint64_t{len < 80 ? len : 80});
        ASSERT_EQ(distinct_substrings(x, n), oracle::substrings(x.to_string(), n).size()) << x.to_string() << " n=" << n;
        std::set<std::string> ws;
        for (const auto& w : distinct_windows(x, n)) ws.insert(w.to_string());
        ASSERT_EQ(ws, oracle::substrings(x.to_string(), n));
    }
}

TEST(SizeBound, ExactIntegerCheck) {
    for (const Rational& alpha : {Rational(1, 2), Rational(3, 5), Rational(2, 3), Rational(7, 10), Rational(1)}) {
        for (std::uint64_t i = 1; i <= 30; ++i) {
            const BigInt b = size_bound(alpha, i);
            // floor(2^(alpha i)) cross-checked in floating point away from integer boundaries
            const double approx = std::pow(2.0, static_cast<double>(alpha.convert_to<double>()) * static_cast<double>(i));
            EXPECT_NEAR(b.convert_to<double>(), std::floor(approx), 1.0);
            ASSERT_TRUE(fits_size_bound(b, alpha, i));
            ASSERT_FALSE(fits_size_bound(b + 1, alpha, i));
        }
    }
}

TEST(Surjections, ClosedFormRecurrenceAndBruteForce) {
    EXPECT_EQ(surjections(3, 2), 6);
    EXPECT_EQ(surjections(0, 0), 1);
    EXPECT_EQ(surjections(2, 3), 0);
    SurjectionRow row(8);
    for (std::uint64_t p = 1; p <= 12; ++p) {
        row.advance();
        for (std::uint64_t j = 0; j <= 8; ++j) ASSERT_EQ(row[j], surjections(p, j)) << p << "," << j;
    }
    // enumerate all maps [p] -> [j]
    for (std::uint64_t p = 1; p <= 6; ++p) {
        for (std::uint64_t j = 1; j <= 4; ++j) {
            std::uint64_t total = 1;
            for (std::uint64_t i = 0; i < p; ++i) total *= j;
            std::uint64_t onto = 0;
            for (std::uint64_t code = 0; code < total; ++code) {
                std::set<std::uint64_t> seen;
                for (std::uint64_t c = code, i = 0; i < p; ++i, c /= j) seen.insert(c % j);
                if (seen.size() == j) ++onto;
            }
            ASSERT_EQ(surjections(p, j), onto);
        }
    }
}

TEST(CountSimple, SmallExample) {
    EXPECT_EQ(count_simple(6, 2, 2), 40);  // 4 constant + 6 pairs x 6 surjections
    EXPECT_EQ(count_simple(4, 2, 1), 4);
    EXPECT_THROW(count_simple(5, 2, 1), std::invalid_argument);
}

TEST(CountSimple, BruteForceUpTo16) {
    for (std::uint64_t n : {2, 4}) {
        for (std::uint64_t N = 2 * n; N <= 16; N += n) {
            std::map<std::size_t, std::uint64_t> by_blocks;
            for (std::uint64_t v = 0; v < (std::uint64_t{1} << N); ++v) {
                ++by_blocks[oracle::aligned_blocks(oracle::bits_of(v, N), n).size()];
            }
            std::uint64_t cumulative = 0;
            for (std::uint64_t t = 1; t <= N / n; ++t) {
                cumulative += by_blocks[t];
                ASSERT_EQ(count_simple(N, n, t), cumulative) << "N=" << N << " n=" << n << " t=" << t;
            }
        }
    }
    EXPECT_TRUE(is_simple(bs("01010101"), 2, 1));
    EXPECT_FALSE(is_simple(bs("01100101"), 2, 1));
}

TEST(MissProbability, EnumeratedSubsets) {
    // all six 2-subsets of {00,01,10,11}; three miss "01"
    EXPECT_EQ(miss_probability_random_set(1, 2, 2).value(), Rational(1, 2));
    const auto t = oracle::pascal(64);
    for (std::size_t pool = 1; pool <= 12; ++pool) {
        for (std::size_t d = 0; d <= pool; ++d) {
            for (std::size_t s = 0; s <= pool; ++s) {
                std::uint64_t miss = 0;
                std::uint64_t all = 0;
                for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << pool); ++mask) {
                    if (static_cast<std::size_t>(std::popcount(mask)) != s) continue;
                    ++all;
                    if ((mask & ((std::uint64_t{1} << d) - 1)) == 0) ++miss;
                }
                ASSERT_EQ(miss_probability(pool, d, s).value(), Rational(miss, all)) << pool << "," << d << "," << s;
            }
        }
    }
    EXPECT_EQ(miss_probability(64, 9, 20).value(), pascal_miss(64, 9, 20, t));
}

TEST(MissProbability, Monotone) {
    for (std::uint64_t s = 1; s < 16; ++s) {
        for (std::uint64_t d = 1; d < 16; ++d) {
            ASSERT_LE(miss_probability(16, d + 1, s), miss_probability(16, d, s));
            ASSERT_LE(miss_probability(16, d, s + 1), miss_probability(16, d, s));
        }
    }
    EXPECT_THROW(miss_probability(4, 5, 1), std::invalid_argument);
}

TEST(SampleUniformSet, EdgeCases) {
    RandomSource rs(1);
    const auto all = sample_uniform_set(3, 8, rs);
    ASSERT_EQ(all.size(), 8U);
    for (std::uint64_t v = 0; v < 8; ++v) EXPECT_EQ(all[v], BitString::from_value(v, 3));
    EXPECT_TRUE(sample_uniform_set(3, 0, rs).empty());
    EXPECT_THROW(sample_uniform_set(3, 9, rs), std::invalid_argument);
    RandomSource a(77);
    RandomSource b(77);
    EXPECT_EQ(sample_uniform_set(20, 50, a), sample_uniform_set(20, 50, b));
}

TEST(SampleUniformSet, FrequenciesWithinThreeSigma) {
    constexpr int kTrials = 100000;
    std::map<std::string, int> element;
    std::map<std::string, int> pair;
    for (int seed = 0; seed < kTrials; ++seed) {
        RandomSource rs(static_cast<std::uint64_t>(seed));
        const auto set = sample_uniform_set(3, 2, rs);
        ASSERT_EQ(set.size(), 2U);
        for (const auto& x : set) ++element[x.to_string()];
        ++pair[set[0].to_string() + set[1].to_string()];
    }
    const auto check = [&](const std::map<std::string, int>& hist, double p, std::size_t cells) {
        EXPECT_EQ(hist.size(), cells);
        const double sigma = std::sqrt(p * (1 - p) / kTrials);
        for (const auto& [k, c] : hist) EXPECT_NEAR(c / double(kTrials), p, 3 * sigma) << k;
    };
    check(element, 2.0 / 8, 8);
    check(pair, 1.0 / 28, 28);
}

TEST(SimpleChain, ThreeLevelBruteForce) {
    const std::vector<std::size_t> lengths{2, 4, 8};
    for (std::uint64_t t1 = 1; t1 <= 2; ++t1) {
        for (std::uint64_t t2 = 1; t2 <= 2; ++t2) {
            const SimpleChain chain({2, 4, 8}, {t1, t2});
            std::set<BitString> expected;
            for (std::uint64_t v = 0; v < 256; ++v) {
                const std::string x = oracle::bits_of(v, 8);
                const bool ok = oracle::recursively_simple(x, lengths, {t1, t2}, 2);
                ASSERT_EQ(chain.contains(bs(x)), ok) << x;
                if (ok) expected.insert(bs(x));
            }
            ASSERT_EQ(chain.size(), BigInt(expected.size())) << t1 << "," << t2;
            std::set<BitString> unranked;
            for (BigInt i = 0; i < chain.size(); ++i) unranked.insert(chain.unrank(i));
            ASSERT_EQ(unranked, expected);
            EXPECT_THROW(chain.unrank(chain.size()), std::out_of_range);
        }
    }
}

TEST(SimpleChain, UnrankBijectionTwoLevel) {
    const SimpleChain chain({3, 12}, {3});
    const BigInt size = chain.size();
    EXPECT_EQ(size, count_simple(12, 3, 3));
    std::set<BitString> seen;
    for (BigInt i = 0; i < size; ++i) {
        const auto x = chain.unrank(i);
        ASSERT_TRUE(chain.contains(x));
        ASSERT_TRUE(seen.insert(x).second);
    }
    EXPECT_THROW(SimpleChain({4, 6}, {1}), std::invalid_argument);
    EXPECT_THROW(SimpleChain({4, 8}, {}), std::invalid_argument);
}

TEST(LevelFamily, Validation) {
    EXPECT_THROW(LevelFamily(Rational(0)), std::invalid_argument);
    EXPECT_THROW(LevelFamily(Rational(3, 2)), std::invalid_argument);
    LevelFamily fam(Rational(1, 2));
    fam.add_level(2, FixedLevel{{bs("01"), bs("10")}});
    EXPECT_TRUE(fam.level_fits_bound(2));
    EXPECT_THROW(fam.add_level(2, FixedLevel{}), std::invalid_argument);
    EXPECT_THROW(fam.add_level(3, FixedLevel{{bs("01")}}), std::invalid_argument);
    EXPECT_THROW(fam.add_level(4, FixedLevel{{bs("0101"), bs("0101")}}), std::invalid_argument);
    fam.add_level(4, FixedLevel{{bs("0000"), bs("0001"), bs("0010"), bs("0011"), bs("0100")}});
    EXPECT_FALSE(fam.level_fits_bound(4));  // 5 > 2^2
    EXPECT_FALSE(fam.all_levels_fit_bound());
    EXPECT_TRUE(fam.hits(bs("111101")));
    EXPECT_FALSE(fam.hits(bs("1111")));
}

TEST(HitProbability, ToyExactAndMonteCarlo) {
    LevelFamily model(Rational(1, 2));
    RandomSource rs(3);
    model.add_level(2, SampledLevel{SimpleChain::cube(2), 2, sample_uniform_set(2, 2, rs)});
    EXPECT_EQ(hit_probability(bs("01"), model).value(), Rational(1, 2));

    const auto x = bs("0110");
    LevelFamily m4(Rational(1, 2));
    RandomSource r0(0);
    m4.add_level(2, SampledLevel{SimpleChain::cube(2), 2, sample_uniform_set(2, 2, r0)});
    m4.add_level(4, FixedLevel{{bs("1111")}});
    // windows 01, 11, 10: miss = C(1,2)/C(4,2) = 0
    EXPECT_EQ(hit_probability(x, m4).value(), 1);

    const auto y = bs("0001");
    LevelFamily m5(Rational(1, 2));
    m5.add_level(2, SampledLevel{SimpleChain::cube(2), 1, {bs("11")}});
    m5.add_level(4, FixedLevel{});
    const Rational exact = hit_probability(y, m5).value();  // windows 00, 01: 1 - C(2,1)/C(4,1)
    EXPECT_EQ(exact, Rational(1, 2));
    int hits = 0;
    constexpr int kTrials = 20000;
    for (int s = 0; s < kTrials; ++s) {
        RandomSource r(static_cast<std::uint64_t>(s) + 1000);
        LevelFamily draw(Rational(1, 2));
        draw.add_level(2, FixedLevel{sample_uniform_set(2, 1, r)});
        if (draw.hits(y)) ++hits;
    }
    EXPECT_NEAR(hits / double(kTrials), 0.5, 3 * std::sqrt(0.25 / kTrials));
    EXPECT_THROW(hit_probability(bs("010"), m5), std::invalid_argument);
}

TEST(TwoLevel, CertificateRechecks) {
    RandomSource rs(2026);
    const auto start = std::chrono::steady_clock::now();
    const auto res = two_level_family(Rational(3, 5), ExactProb(Rational(1, 10)), 1, rs);
    const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EXPECT_LT(secs, 60.0);
    const auto& c = res.certificate;
    EXPECT_EQ(c.n, 12U);
    EXPECT_EQ(c.threshold, 64);
    EXPECT_EQ(c.sample_size, 147);

    // independent rechecks of the certificate
    Rational miss = 1;
    for (int i = 0; i < 147; ++i) miss *= Rational(63, 64);
    EXPECT_EQ(c.miss_bound, miss);
    EXPECT_LT(miss, Rational(1, 10));
    Rational prev = 1;  // n = 11 must fail: (63/64)^floor(2^6.6) = (63/64)^97
    for (int i = 0; i < 97; ++i) prev *= Rational(63, 64);
    EXPECT_GE(prev, Rational(1, 10));
    EXPECT_LE(c.worst_miss.value(), c.miss_bound);

    EXPECT_EQ(c.N % c.n, 0U);
    EXPECT_TRUE(fits_size_bound(count_simple(c.N, c.n, c.threshold), Rational(3, 5), c.N));
    EXPECT_FALSE(fits_size_bound(count_simple(c.N - c.n, c.n, c.threshold), Rational(3, 5), c.N - c.n));
    for (const auto& lv : c.levels) EXPECT_TRUE(lv.fits) << "level " << lv.length;
    EXPECT_TRUE(res.family.all_levels_fit_bound());
    EXPECT_EQ(res.family.cardinality(12), 147);

    // any string with > 64 distinct aligned 12-blocks has > 64 distinct 12-windows
    RandomSource draw(5);
    const BitString x = draw.bits(c.N);
    ASSERT_GT(distinct_blocks(x, 12), 64U);
    EXPECT_GE(hit_probability(x, res.family).value(), Rational(1) - c.miss_bound);
    EXPECT_THROW(two_level_family(Rational(1, 2), ExactProb(Rational(1, 10)), 1, rs), std::invalid_argument);
}

TEST(Layered, ParamsValidation) {
    EXPECT_THROW((LayeredParams{Rational(1, 2), ExactProb(Rational(1, 4)), {4, 8}, {1}}.validate()), std::invalid_argument);
    EXPECT_NO_THROW((LayeredParams{Rational(2, 5), ExactProb(Rational(1, 4)), {2, 4, 8}, {2, 1}}.validate()));
    EXPECT_THROW((LayeredParams{Rational(3, 5), ExactProb(Rational(1, 4)), {4, 6}, {1}}.validate()), std::invalid_argument);
}

TEST(Layered, ThreeLevelToy) {
    const LayeredParams params{Rational(2, 5), ExactProb(Rational(1, 2)), {2, 4, 8}, {2, 2}};
    RandomSource rs(9);
    const auto res = multi_level_family(params, rs);
    EXPECT_EQ(res.family.levels().size(), 3U);
    EXPECT_EQ(res.family.cardinality(2), size_bound(Rational(2, 5), 2));
    EXPECT_EQ(res.certificate.pool_sizes[0], 4);
    EXPECT_EQ(res.certificate.pool_sizes[1], SimpleChain({2, 4}, {2}).size());
    // sampled level-4 strings are simple at level 2
    for (const auto& s : std::get<SampledLevel>(res.family.levels().at(4)).strings) {
        EXPECT_LE(distinct_blocks(s, 2), 2U);
    }
    const auto t = oracle::pascal(64);
    const auto pool4 = static_cast<std::size_t>(res.certificate.pool_sizes[1]);
    EXPECT_EQ(res.certificate.worst_miss[1].value(),
              pascal_miss(pool4, 3, static_cast<std::size_t>(size_bound(Rational(2, 5), 4)), t));
}

TEST(Derandomize, FindsFamilyAndRechecks) {
    const auto P = FiniteDistribution::uniform(8);
    const LayeredParams params{Rational(3, 5), ExactProb(Rational(1, 4)), {4, 8}, {1}};
    RandomSource rs(31);
    const auto res = derandomize_family(P, params, rs);

    // averaged bound from Pascal rows and string oracles
    const auto t = oracle::pascal(64);
    const std::size_t s = 5;  // floor(2^2.4)
    Rational avg = 0;
    for (std::uint64_t v = 0; v < 256; ++v) {
        const std::string x = oracle::bits_of(v, 8);
        if (oracle::aligned_blocks(x, 4).size() <= 1) continue;
        avg += Rational(1, 256) * pascal_miss(16, oracle::substrings(x, 4).size(), s, t);
    }
    EXPECT_EQ(res.averaged_bound.value(), avg);

    // realized avoid probability by brute force over the explicit strings
    std::set<std::string> level4;
    for (const auto& w : std::get<SampledLevel>(res.family.levels().at(4)).strings) level4.insert(w.to_string());
    ASSERT_EQ(level4.size(), s);
    std::uint64_t avoiding = 0;
    for (std::uint64_t v = 0; v < 256; ++v) {
        const std::string x = oracle::bits_of(v, 8);
        bool hit = oracle::aligned_blocks(x, 4).size() <= 1;
        for (const auto& w : oracle::substrings(x, 4)) hit = hit || level4.count(w) != 0;
        if (!hit) ++avoiding;
    }
    EXPECT_EQ(res.avoid_probability.value(), Rational(avoiding, 256));
    EXPECT_LT(res.avoid_probability.value(), Rational(1, 4));
    EXPECT_TRUE(res.family.all_levels_fit_bound());

    // reproducible from the recorded stream
    RandomSource again = rs.substream(res.stream_index);
    EXPECT_EQ(std::get<SampledLevel>(multi_level_family(params, again).family.levels().at(4)).strings,
              std::get<SampledLevel>(res.family.levels().at(4)).strings);
}

TEST(Derandomize, DeficitCountsAsAvoiding) {
    const auto P = FiniteDistribution::uniform(8).scaled(Rational(1, 2));
    const LayeredParams params{Rational(3, 5), ExactProb(Rational(1, 4)), {4, 8}, {1}};
    RandomSource rs(31);
    EXPECT_THROW(derandomize_family(P, params, rs), std::invalid_argument);
    const LayeredParams wide{Rational(3, 5), ExactProb(Rational(3, 4)), {4, 8}, {1}};
    const auto res = derandomize_family(P, wide, rs);
    EXPECT_GE(res.avoid_probability.value(), Rational(1, 2));
}

TEST(Schedule, UniformFourFifths) {
    RandomSource rs(12);
    const auto intervals = interval_schedule([](std::uint64_t N) { return FiniteDistribution::uniform(N); }, Rational(4, 5), 3, rs);
    ASSERT_EQ(intervals.size(), 3U);
    const std::vector<std::pair<std::uint64_t, std::uint64_t>> expected{{1, 2}, {3, 6}, {7, 14}};
    std::uint64_t previous_end = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& iv = intervals[i];
        EXPECT_EQ((std::pair{iv.n, iv.N}), expected[i]);
        EXPECT_GT(iv.n, previous_end);  // disjoint, increasing
        previous_end = iv.N;
        EXPECT_EQ(iv.epsilon.value(), Rational(1, pow2(i + 1)));
        EXPECT_LT(iv.result.avoid_probability, iv.epsilon);
        EXPECT_TRUE(iv.result.family.all_levels_fit_bound());
        EXPECT_EQ(iv.result.avoid_probability, family_avoid_probability(FiniteDistribution::uniform(iv.N), iv.result.family));
    }
}

TEST(Schedule, ReportsInfeasibility) {
    RandomSource rs(12);
    EXPECT_THROW(interval_schedule([](std::uint64_t N) { return FiniteDistribution::uniform(N); }, Rational(3, 5), 3, rs),
                 std::runtime_error);
}
