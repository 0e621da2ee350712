#include "ecs/proxy.hpp"
#include "ecs/random.hpp"

#include <gtest/gtest.h>

using namespace ecs;
using namespace ecs::proxy;

namespace {

// Empirical slack for C(xy) <= C(x) + C(y) + c. Merging two parses costs at most
// the first phrase of y re-coded plus wider indices; measured max over the
// property below was well under this.
constexpr std::size_t kSubadditivitySlack = 128;

}  // namespace

TEST(Proxy, RoundTrip) {
    RandomSource rs(1);
    for (int t = 0; t < 200; ++t) {
        const BitString x = rs.bits(rs.uniform_below(std::uint64_t{3000}));
        ASSERT_EQ(decode(encode(x)), x);
    }
    for (std::size_t len : {0, 1, 2, 3, 7, 64, 1000}) {
        const BitString zeros(len, false);
        ASSERT_EQ(decode(encode(zeros)), zeros);
        BitString alt;
        for (std::size_t i = 0; i < len; ++i) alt.push_back(i % 2 == 1);
        ASSERT_EQ(decode(encode(alt)), alt);
    }
}

TEST(Proxy, HeaderAndEmptyString) {
    EXPECT_EQ(compress_size(BitString()), kHeaderBits);
    EXPECT_EQ(compress_size(BitString::from_string("0")), kHeaderBits + 1);
    EXPECT_THROW(decode(BitString(10)), std::invalid_argument);
    BitString code = encode(BitString::from_string("0110"));
    code.push_back(true);
    EXPECT_THROW(decode(code), std::invalid_argument);
}

TEST(Proxy, RegularStringsCompress) {
    const BitString zeros(1 << 16, false);
    EXPECT_LT(compress_size(zeros), 8000U);
    RandomSource rs(2);
    const BitString noise = rs.bits(1 << 16);
    EXPECT_GT(compress_size(noise), compress_size(zeros) * 10);
    BitString periodic;
    for (int i = 0; i < (1 << 14); ++i) periodic.append(BitString::from_string("0110"));
    EXPECT_LT(compress_size(periodic), compress_size(noise) / 4);
}

TEST(Proxy, SubadditivityWithSlack) {
    RandomSource rs(3);
    for (int t = 0; t < 300; ++t) {
        BitString x = rs.bits(rs.uniform_below(std::uint64_t{2000}));
        BitString y = t % 3 == 0 ? BitString(rs.uniform_below(std::uint64_t{2000}), false) : rs.bits(rs.uniform_below(std::uint64_t{2000}));
        BitString xy = x;
        xy.append(y);
        ASSERT_LE(compress_size(xy), compress_size(x) + compress_size(y) + kSubadditivitySlack) << x.size() << "+" << y.size();
    }
}

TEST(Proxy, WindowProfile) {
    RandomSource rs(4);
    BitString x = rs.bits(512);
    x.append(BitString(512, false));
    const auto p = window_profile(x, 256, 128);
    ASSERT_EQ(p.offsets.size(), 7U);
    EXPECT_EQ(p.values.size(), 7U);
    EXPECT_EQ(p.argmin, 512U);  // first all-zero window
    EXPECT_LE(p.min, p.mean);
    EXPECT_GE(p.max, p.mean);
    for (std::size_t i = 0; i < p.offsets.size(); ++i) EXPECT_EQ(p.values[i], compress_size(x.window(p.offsets[i], 256)));
    EXPECT_THROW(window_profile(x, 2000), std::invalid_argument);
    EXPECT_THROW(window_profile(x, 10, 0), std::invalid_argument);
}
