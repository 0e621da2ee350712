#ifndef ECS_ADVERSARY_HPP
#define ECS_ADVERSARY_HPP

#include "ecs/bitstring.hpp"
#include "ecs/distribution.hpp"
#include "ecs/rational.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ecs::adversary {

/// One forbidden n-bit string per start position 0..N-1.
struct PositionalFamily {
    std::size_t n = 0;
    std::vector<BitString> strings;
    ExactProb certificate;         // avoid probability for the full distribution (deficit counted as avoiding)
    ExactProb enumerated_part;     // avoid probability restricted to the enumerated masses
    ExactProb epsilon;             // target the family was built for
    std::optional<std::string> g;  // complexity-bound function label, metadata only

    std::size_t positions() const noexcept { return strings.size(); }
};

/// Smallest N with (1 - 2^-n)^N < epsilon.
inline std::uint64_t required_N(std::uint64_t n, const ExactProb& epsilon) {
    if (epsilon.value() <= 0) throw std::invalid_argument("required_N: epsilon must be positive");
    if (n == 0) throw std::invalid_argument("required_N: n must be positive");
    const BigInt den = pow2(n);
    const BigInt num = den - 1;
    const BigInt eps_num = epsilon.numerator();
    const BigInt eps_den = epsilon.denominator();
    // (num/den)^N < eps  <=>  num^N * eps_den < eps_num * den^N
    auto holds = [&](std::uint64_t N) { return big_pow(num, N) * eps_den < eps_num * big_pow(den, N); };
    std::uint64_t hi = 1;
    while (!holds(hi)) {
        if (hi > (std::uint64_t{1} << 40)) throw std::overflow_error("required_N: N too large");
        hi *= 2;
    }
    std::uint64_t lo = hi / 2;  // holds(lo) is false unless lo == 0
    if (lo == 0 && holds(0)) return 0;
    while (hi - lo > 1) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (holds(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

inline void check_family_shape(const FiniteDistribution& P, std::size_t n, std::size_t positions) {
    if (n == 0) throw std::invalid_argument("positional family: n must be positive");
    if (P.length() != positions + n - 1) {
        throw std::invalid_argument("positional family: distribution length " + std::to_string(P.length()) + " != N + n - 1 = " +
                                    std::to_string(positions + n - 1));
    }
}

inline bool avoids(const BitString& x, const std::vector<BitString>& strings, std::size_t n) {
    for (std::size_t k = 0; k < strings.size(); ++k) {
        if (x.window(k, n) == strings[k]) return false;
    }
    return true;
}

/// Mass of the enumerated support that avoids every s_k at position k.
inline Rational enumerated_avoid_mass(const FiniteDistribution& P, const std::vector<BitString>& strings, std::size_t n) {
    check_family_shape(P, n, strings.size());
    Rational total = 0;
    for (const auto& [x, m] : P.masses()) {
        if (avoids(x, strings, n)) total += m;
    }
    return total;
}

/// Full avoid probability; the deficit counts as avoiding.
inline ExactProb avoid_probability(const FiniteDistribution& P, const std::vector<BitString>& strings, std::size_t n) {
    return ExactProb(enumerated_avoid_mass(P, strings, n) + P.deficit());
}

inline ExactProb avoid_probability(const FiniteDistribution& P, const PositionalFamily& fam) {
    return avoid_probability(P, fam.strings, fam.n);
}

namespace detail {

/// Depth-first walk of (B^n)^N in lexicographic order (position 0 most
/// significant, strings as numerals), tracking the support that still avoids the
/// chosen prefix. Returns the first family whose enumerated avoid mass < target.
class LexSearch {
public:
    LexSearch(const FiniteDistribution& P, std::size_t n, std::size_t positions, Rational target)
        : n_(n), positions_(positions), target_(std::move(target)) {
        for (const auto& [x, m] : P.masses()) {
            support_.push_back(x);
            masses_.push_back(m);
            std::vector<std::uint64_t> row(positions);
            for (std::size_t k = 0; k < positions; ++k) row[k] = x.value(k, n);
            windows_.push_back(std::move(row));
        }
    }

    std::optional<std::vector<std::uint64_t>> run() {
        std::vector<std::size_t> alive(support_.size());
        for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;
        choice_.assign(positions_, 0);
        if (descend(0, alive)) return choice_;
        return std::nullopt;
    }

private:
    bool descend(std::size_t depth, const std::vector<std::size_t>& alive) {
        if (depth == positions_) {
            Rational mass = 0;
            for (auto i : alive) mass += masses_[i];
            return mass < target_;
        }
        const std::uint64_t limit = std::uint64_t{1} << n_;
        std::vector<std::size_t> next;
        next.reserve(alive.size());
        for (std::uint64_t s = 0; s < limit; ++s) {
            next.clear();
            for (auto i : alive) {
                if (windows_[i][depth] != s) next.push_back(i);
            }
            choice_[depth] = s;
            if (descend(depth + 1, next)) return true;
        }
        return false;
    }

    std::size_t n_;
    std::size_t positions_;
    Rational target_;
    std::vector<BitString> support_;
    std::vector<Rational> masses_;
    std::vector<std::vector<std::uint64_t>> windows_;
    std::vector<std::uint64_t> choice_;
};

inline PositionalFamily search(const FiniteDistribution& P, std::size_t n, const ExactProb& epsilon, const Rational& target) {
    if (n > 20) throw std::invalid_argument("positional search: n too large for exhaustive search");
    const std::size_t positions = P.length() + 1 - n;
    LexSearch lex(P, n, positions, target);
    auto choice = lex.run();
    if (!choice) throw std::runtime_error("positional search: no family meets the target (existence bound violated)");
    PositionalFamily fam;
    fam.n = n;
    fam.epsilon = epsilon;
    for (auto v : *choice) fam.strings.push_back(BitString::from_value(v, n));
    fam.enumerated_part = ExactProb(enumerated_avoid_mass(P, fam.strings, n));
    fam.certificate = ExactProb(fam.enumerated_part.value() + P.deficit());
    return fam;
}

}  // namespace detail

/// First family in lexicographic order with avoid probability < epsilon.
/// Requires (1 - 2^-n)^N + deficit < epsilon, N = length - n + 1.
inline PositionalFamily positional_family_search(const FiniteDistribution& P, std::size_t n, const ExactProb& epsilon) {
    if (n == 0 || n > P.length()) throw std::invalid_argument("positional_family_search: need 1 <= n <= length");
    const std::size_t positions = P.length() + 1 - n;
    const Rational average = rational_pow(Rational(pow2(n) - 1, pow2(n)), positions);
    if (!(average + P.deficit() < epsilon.value())) {
        const ExactProb target_left(epsilon.value() > P.deficit() ? epsilon.value() - P.deficit() : Rational(0));
        std::string needed = target_left.value() > 0 ? std::to_string(required_N(n, target_left)) : std::string("none");
        throw std::invalid_argument("positional_family_search: (1-2^-n)^N + deficit = " + to_string(average + P.deficit()) +
                                    " is not below epsilon " + epsilon.str() + " (N = " + std::to_string(positions) +
                                    ", required N = " + needed + ")");
    }
    return detail::search(P, n, epsilon, epsilon.value() - P.deficit());
}

/// Search on the enumerated part with target epsilon - deficit; requires deficit <= epsilon/2.
inline PositionalFamily truncated_search(const FiniteDistribution& P, std::size_t n, const ExactProb& epsilon) {
    if (P.deficit() * 2 > epsilon.value()) {
        throw std::invalid_argument("truncated_search: deficit " + to_string(P.deficit()) + " exceeds epsilon/2 = " +
                                    to_string(epsilon.value() / 2));
    }
    if (n == 0 || n > P.length()) throw std::invalid_argument("truncated_search: need 1 <= n <= length");
    const std::size_t positions = P.length() + 1 - n;
    const Rational target = epsilon.value() - P.deficit();
    const Rational average = rational_pow(Rational(pow2(n) - 1, pow2(n)), positions) * P.total_mass();
    if (!(average < target)) {
        throw std::invalid_argument("truncated_search: averaged enumerated avoid mass " + to_string(average) +
                                    " is not below epsilon - deficit = " + to_string(target));
    }
    return detail::search(P, n, epsilon, target);
}

/// Exact average of avoid_probability over all (2^n)^N equiprobable families,
/// checked against (1 - 2^-n)^N.
inline ExactProb expected_avoid_identity(const FiniteDistribution& P, std::size_t n, std::size_t N) {
    if (P.deficit() != 0) throw std::invalid_argument("expected_avoid_identity: distribution must have total mass 1");
    check_family_shape(P, n, N);
    if (n * N > 20) throw std::invalid_argument("expected_avoid_identity: (2^n)^N exceeds 2^20; use the analytic identity");
    const std::uint64_t families = std::uint64_t{1} << (n * N);
    std::vector<std::pair<std::vector<std::uint64_t>, Rational>> support;
    for (const auto& [x, m] : P.masses()) {
        std::vector<std::uint64_t> w(N);
        for (std::size_t k = 0; k < N; ++k) w[k] = x.value(k, n);
        support.emplace_back(std::move(w), m);
    }
    const std::uint64_t digit_mask = (std::uint64_t{1} << n) - 1;
    Rational sum = 0;
    for (const auto& [w, m] : support) {
        std::uint64_t avoiding = 0;
        for (std::uint64_t code = 0; code < families; ++code) {
            bool avoid = true;
            for (std::size_t k = 0; k < N && avoid; ++k) {
                const std::uint64_t s = (code >> (n * (N - 1 - k))) & digit_mask;
                avoid = w[k] != s;
            }
            if (avoid) ++avoiding;
        }
        sum += m * avoiding;
    }
    const Rational average = sum / Rational(BigInt(families));
    const Rational expected = rational_pow(Rational(pow2(n) - 1, pow2(n)), N);
    if (average != expected) {
        throw std::logic_error("expected_avoid_identity: average " + to_string(average) + " != (1-2^-n)^N = " + to_string(expected));
    }
    return ExactProb(average);
}

}  // namespace ecs::adversary

#endif  // ECS_ADVERSARY_HPP
