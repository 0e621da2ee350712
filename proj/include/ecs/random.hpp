#ifndef ECS_RANDOM_HPP
#define ECS_RANDOM_HPP

#include "ecs/bitstring.hpp"
#include "ecs/rational.hpp"

#include <cstdint>
#include <stdexcept>

namespace ecs {

namespace detail {

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace detail

/// Counter-based random source. Every output word is a pure function of
/// (seed, stream path, counter); the object only remembers how many words it
/// has handed out.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed = 0) : seed_(seed), key_(detail::mix64(seed ^ detail::kGolden)) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t counter() const noexcept { return counter_; }

    /// Independent child stream; does not depend on how much this source has been used.
    RandomSource substream(std::uint64_t index) const {
        RandomSource child(seed_);
        child.key_ = detail::mix64(key_ + (index + 1) * 0xd1b54a32d192ed03ULL);
        return child;
    }

    /// Word number `counter` of this stream.
    std::uint64_t at(std::uint64_t counter) const noexcept {
        return detail::mix64(detail::mix64(key_ ^ (counter * detail::kGolden)) + counter);
    }

    std::uint64_t next_u64() noexcept {
        bit_count_ = 0;
        return at(counter_++);
    }

    bool next_bit() noexcept {
        if (bit_count_ == 0) {
            bit_buffer_ = at(counter_++);
            bit_count_ = 64;
        }
        const bool bit = bit_buffer_ & 1U;
        bit_buffer_ >>= 1U;
        --bit_count_;
        return bit;
    }

    BitString bits(std::size_t n) {
        BitString out(n);
        for (std::size_t i = 0; i < n; ++i) out.set(i, next_bit());
        return out;
    }

    /// Uniform in [0, bound), by rejection; bound > 0.
    std::uint64_t uniform_below(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("RandomSource::uniform_below: zero bound");
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
        for (;;) {
            const std::uint64_t v = next_u64();
            if (v < limit) return v % bound;
        }
    }

    /// Uniform in [0, bound) for big bounds, by rejection on msb(bound)+1 random bits.
    BigInt uniform_below(const BigInt& bound) {
        if (bound <= 0) throw std::invalid_argument("RandomSource::uniform_below: non-positive bound");
        const unsigned bits = static_cast<unsigned>(boost::multiprecision::msb(bound)) + 1;
        for (;;) {
            BigInt v = 0;
            unsigned remaining = bits;
            while (remaining >= 64) {
                v = (v << 64) | BigInt(next_u64());
                remaining -= 64;
            }
            if (remaining > 0) v = (v << remaining) | BigInt(next_u64() >> (64 - remaining));
            if (v < bound) return v;
        }
    }

    /// Uniform double in [0, 1), for Monte Carlo reports only.
    double uniform01() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t seed_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::uint64_t bit_buffer_ = 0;
    unsigned bit_count_ = 0;
};

}  // namespace ecs

#endif  // ECS_RANDOM_HPP
