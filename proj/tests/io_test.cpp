#include "ecs/io.hpp"

#include <gtest/gtest.h>

using namespace ecs;

namespace {

BitString bs(const std::string& s) { return BitString::from_string(s); }

}  // namespace

TEST(Json, DistributionRoundTrip) {
    FiniteDistribution::Masses m{{bs("010"), Rational(1, 3)}, {bs("111"), Rational(1, 2)}};
    const FiniteDistribution P(3, m, Rational(1, 6));
    const auto back = io::distribution_from_json(io::to_json(P));
    EXPECT_EQ(back.masses(), P.masses());
    EXPECT_EQ(back.deficit(), Rational(1, 6));
    auto j = io::to_json(P);
    j.erase("deficit");
    EXPECT_EQ(io::distribution_from_json(j).deficit(), Rational(1, 6));
    j["masses"]["010"] = "2/3";
    EXPECT_THROW(io::distribution_from_json(j), std::invalid_argument);
}

TEST(Json, AllocationRoundTrip) {
    const auto w = spreader::WeightSeries::inverse_triangular();
    const auto a = spreader::Allocation::plan(w, static_cast<unsigned>(spreader::choose_m0(w)), 12);
    const auto j = io::to_json(a);
    EXPECT_EQ(j.at("weights"), "inverse-triangular");
    const auto b = io::allocation_from_json(j);
    for (unsigned m = a.m0(); m <= a.max_level(); ++m) ASSERT_EQ(a.first_terms(m), b.first_terms(m));
    for (std::uint64_t i = 0; i < 4096; ++i) ASSERT_EQ(a.find_source(i), b.find_source(i));

    auto bad = j;
    bad["levels"][1]["first_terms"][0] = bad["levels"][0]["first_terms"][0];
    EXPECT_THROW(io::allocation_from_json(bad), std::invalid_argument);
    auto miscount = j;
    miscount["levels"][0]["count"] = 1;
    EXPECT_THROW(io::allocation_from_json(miscount), std::invalid_argument);
}

TEST(Json, FamilyRoundTripAllKinds) {
    forbidden::LevelFamily fam(Rational(3, 5));
    fam.add_level(3, forbidden::FixedLevel{{bs("010"), bs("111")}});
    RandomSource rs(2);
    const auto pool = forbidden::SimpleChain({4, 8}, {1});
    fam.add_level(8, forbidden::SampledLevel{pool, 3, forbidden::sample_from_pool(pool, 3, rs)});
    const auto top = forbidden::SimpleChain({4, 8, 16}, {1, 1});
    fam.add_level(16, forbidden::ImplicitLevel{top, top.size()});

    const auto j = io::to_json(fam);
    EXPECT_EQ(j.at("levels")[0].at("kind"), "explicit");
    EXPECT_EQ(j.at("levels")[1].at("kind"), "sampled");
    EXPECT_EQ(j.at("levels")[2].at("kind"), "simple");
    const auto back = io::family_from_json(j);
    EXPECT_EQ(back.alpha(), fam.alpha());
    for (const auto& [len, lv] : fam.levels()) EXPECT_EQ(back.cardinality(len), fam.cardinality(len));
    RandomSource probe(5);
    for (int t = 0; t < 200; ++t) {
        const auto x = probe.bits(16);
        ASSERT_EQ(back.hits(x), fam.hits(x));
    }

    auto tampered = j;
    tampered["levels"][2]["cardinality"] = "1";  // never trusted
    EXPECT_EQ(io::family_from_json(tampered).cardinality(16), top.size());
    auto bad_kind = j;
    bad_kind["levels"][0]["kind"] = "mystery";
    EXPECT_THROW(io::family_from_json(bad_kind), std::invalid_argument);
}

TEST(Json, PositionalFamilyRoundTrip) {
    adversary::PositionalFamily fam;
    fam.n = 2;
    fam.strings = {bs("00"), bs("00"), bs("10")};
    fam.certificate = ExactProb(Rational(7, 16));
    fam.enumerated_part = fam.certificate;
    fam.epsilon = ExactProb(Rational(1, 2));
    fam.g = "n/2";
    const auto back = io::positional_family_from_json(io::to_json(fam));
    EXPECT_EQ(back.strings, fam.strings);
    EXPECT_EQ(back.certificate, fam.certificate);
    EXPECT_EQ(back.g, fam.g);
    auto j = io::to_json(fam);
    j["strings"][1] = "000";
    EXPECT_THROW(io::positional_family_from_json(j), std::invalid_argument);
}

TEST(BitFileIo, WriteAndRead) {
    const std::string path = ::testing::TempDir() + "/io_test_bits.ecs";
    RandomSource rs(1);
    const auto x = rs.bits(777);
    io::write_bits(path, x, io::BitFormat::packed);
    EXPECT_EQ(io::read_bits(path), x);
    io::write_bits(path, x, io::BitFormat::ascii);
    EXPECT_EQ(io::read_bits(path), x);
    EXPECT_THROW(io::read_bits(path + ".missing"), std::runtime_error);
}
