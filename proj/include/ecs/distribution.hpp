#ifndef ECS_DISTRIBUTION_HPP
#define ECS_DISTRIBUTION_HPP

#include "ecs/bitstring.hpp"
#include "ecs/rational.hpp"

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>

namespace ecs {

/// Explicit (sub)probability distribution over strings of one fixed length.
/// Mass not assigned to any string is the deficit ("no output").
class FiniteDistribution {
public:
    using Masses = std::map<BitString, Rational>;

    FiniteDistribution(std::size_t length, Masses masses, Rational deficit)
        : length_(length), masses_(std::move(masses)), deficit_(std::move(deficit)) {
        Rational total = deficit_;
        if (deficit_ < 0) throw std::invalid_argument("FiniteDistribution: negative deficit");
        for (auto it = masses_.begin(); it != masses_.end();) {
            if (it->first.size() != length_) {
                throw std::invalid_argument("FiniteDistribution: support string '" + it->first.to_string() +
                                            "' has length " + std::to_string(it->first.size()) + ", expected " +
                                            std::to_string(length_));
            }
            if (it->second < 0) throw std::invalid_argument("FiniteDistribution: negative mass");
            total += it->second;
            if (it->second == 0) {
                it = masses_.erase(it);
            } else {
                ++it;
            }
        }
        if (total != 1) {
            throw std::invalid_argument("FiniteDistribution: masses plus deficit sum to " + to_string(total) + ", not 1");
        }
    }

    /// Deficit is whatever the masses leave over.
    static FiniteDistribution with_implied_deficit(std::size_t length, Masses masses) {
        Rational total = 0;
        for (const auto& [x, m] : masses) total += m;
        return FiniteDistribution(length, std::move(masses), Rational(1) - total);
    }

    static FiniteDistribution uniform(std::size_t length) {
        if (length > 24) throw std::invalid_argument("FiniteDistribution::uniform: length too large to enumerate");
        Masses masses;
        const std::uint64_t count = std::uint64_t{1} << length;
        const Rational each(1, count);
        for (std::uint64_t v = 0; v < count; ++v) masses.emplace(BitString::from_value(v, length), each);
        return FiniteDistribution(length, std::move(masses), 0);
    }

    static FiniteDistribution point_mass(const BitString& x) {
        return FiniteDistribution(x.size(), Masses{{x, Rational(1)}}, 0);
    }

    /// Same shape with every mass multiplied by `total`; the rest becomes deficit.
    FiniteDistribution scaled(const Rational& total) const {
        if (total < 0 || total > 1) throw std::invalid_argument("FiniteDistribution::scaled: factor outside [0, 1]");
        Masses out;
        for (const auto& [x, m] : masses_) out.emplace(x, m * total);
        return with_implied_deficit(length_, std::move(out));
    }

    std::size_t length() const noexcept { return length_; }
    const Masses& masses() const noexcept { return masses_; }
    const Rational& deficit() const noexcept { return deficit_; }
    Rational total_mass() const { return Rational(1) - deficit_; }

    Rational mass(const BitString& x) const {
        auto it = masses_.find(x);
        return it == masses_.end() ? Rational(0) : it->second;
    }

private:
    std::size_t length_;
    Masses masses_;
    Rational deficit_;
};

}  // namespace ecs

#endif  // ECS_DISTRIBUTION_HPP
