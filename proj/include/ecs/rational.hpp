#ifndef ECS_RATIONAL_HPP
#define ECS_RATIONAL_HPP

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ecs {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline BigInt numerator_of(const Rational& r) { return boost::multiprecision::numerator(r); }
inline BigInt denominator_of(const Rational& r) { return boost::multiprecision::denominator(r); }

inline BigInt pow2(std::uint64_t e) {
    BigInt one = 1;
    return one << static_cast<unsigned>(e);
}

inline BigInt big_pow(BigInt base, std::uint64_t e) {
    BigInt result = 1;
    while (e != 0) {
        if (e & 1U) result *= base;
        e >>= 1U;
        if (e != 0) base *= base;
    }
    return result;
}

inline Rational rational_pow(const Rational& base, std::uint64_t e) {
    return Rational(big_pow(numerator_of(base), e), big_pow(denominator_of(base), e));
}

inline BigInt floor_of(const Rational& r) {
    BigInt q = numerator_of(r) / denominator_of(r);
    if (r < 0 && q * denominator_of(r) != numerator_of(r)) q -= 1;
    return q;
}

inline BigInt ceil_of(const Rational& r) {
    BigInt f = floor_of(r);
    return f == r ? f : f + 1;
}

/// C(a, b); zero when b > a.
inline BigInt binom(std::uint64_t a, std::uint64_t b) {
    if (b > a) return 0;
    if (b > a - b) b = a - b;
    BigInt result = 1;
    for (std::uint64_t i = 1; i <= b; ++i) {
        result *= a - b + i;
        result /= i;
    }
    return result;
}

/// C(a, b) for big a.
inline BigInt binom(const BigInt& a, std::uint64_t b) {
    if (a < 0) throw std::invalid_argument("binom: negative argument");
    if (BigInt(b) > a) return 0;
    BigInt result = 1;
    for (std::uint64_t i = 1; i <= b; ++i) {
        result *= a - b + i;
        result /= i;
    }
    return result;
}

/// Largest r with r^k <= x.
inline BigInt integer_root(const BigInt& x, unsigned k) {
    if (x < 0) throw std::invalid_argument("integer_root: negative argument");
    if (k == 0) throw std::invalid_argument("integer_root: zero degree");
    if (x < 2 || k == 1) return x;
    const auto bits = boost::multiprecision::msb(x) + 1;
    BigInt lo = 0;
    BigInt hi = pow2(bits / k + 1);
    while (lo < hi) {
        BigInt mid = (lo + hi + 1) / 2;
        if (big_pow(mid, k) <= x) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    return lo;
}

/// floor(2^(alpha * i)) for rational alpha >= 0.
inline BigInt floor_pow2(const Rational& alpha, std::uint64_t i) {
    if (alpha < 0) throw std::invalid_argument("floor_pow2: negative exponent");
    const BigInt p = numerator_of(alpha) * i;
    const BigInt q = denominator_of(alpha);
    const BigInt whole = p / q;
    const BigInt rest = p % q;
    const auto q_small = q.convert_to<unsigned>();
    // 2^(p/q) = 2^whole * (2^rest)^(1/q)
    const auto shift = whole.convert_to<std::uint64_t>();
    if (rest == 0) return pow2(shift);
    return integer_root(pow2(shift * q_small + rest.convert_to<std::uint64_t>()), q_small);
}

inline std::string to_string(const BigInt& v) { return v.str(); }

inline std::string to_string(const Rational& r) {
    return numerator_of(r).str() + "/" + denominator_of(r).str();
}

/// Parses "num/den" or a bare integer.
inline Rational parse_rational(std::string_view text) {
    auto parse_int = [](std::string_view s) {
        if (s.empty()) throw std::invalid_argument("parse_rational: empty component");
        std::size_t start = s[0] == '-' ? 1 : 0;
        if (start == s.size()) throw std::invalid_argument("parse_rational: malformed integer");
        for (std::size_t i = start; i < s.size(); ++i) {
            if (s[i] < '0' || s[i] > '9') throw std::invalid_argument("parse_rational: malformed '" + std::string(s) + "'");
        }
        return BigInt(std::string(s));
    };
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) return Rational(parse_int(text));
    const BigInt den = parse_int(text.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("parse_rational: zero denominator");
    return Rational(parse_int(text.substr(0, slash)), den);
}

/// Exact probability in [0, 1], always in lowest terms.
class ExactProb {
public:
    ExactProb() = default;

    explicit ExactProb(Rational value) : value_(std::move(value)) { check(); }

    ExactProb(BigInt num, BigInt den) {
        if (den == 0) throw std::invalid_argument("ExactProb: zero denominator");
        value_ = Rational(std::move(num), std::move(den));
        check();
    }

    static ExactProb zero() { return ExactProb(); }
    static ExactProb one() { return ExactProb(Rational(1)); }
    static ExactProb parse(std::string_view text) { return ExactProb(parse_rational(text)); }

    const Rational& value() const noexcept { return value_; }
    BigInt numerator() const { return numerator_of(value_); }
    BigInt denominator() const { return denominator_of(value_); }

    ExactProb complement() const { return ExactProb(Rational(1) - value_); }

    std::string str() const { return to_string(value_); }

    /// Throws when the sum leaves [0, 1].
    friend ExactProb operator+(const ExactProb& a, const ExactProb& b) { return ExactProb(a.value_ + b.value_); }
    friend ExactProb operator-(const ExactProb& a, const ExactProb& b) { return ExactProb(a.value_ - b.value_); }
    friend ExactProb operator*(const ExactProb& a, const ExactProb& b) { return ExactProb(a.value_ * b.value_); }

    friend bool operator==(const ExactProb& a, const ExactProb& b) { return a.value_ == b.value_; }
    friend bool operator<(const ExactProb& a, const ExactProb& b) { return a.value_ < b.value_; }
    friend bool operator<=(const ExactProb& a, const ExactProb& b) { return a.value_ <= b.value_; }
    friend bool operator>(const ExactProb& a, const ExactProb& b) { return a.value_ > b.value_; }
    friend bool operator>=(const ExactProb& a, const ExactProb& b) { return a.value_ >= b.value_; }

private:
    void check() const {
        if (value_ < 0 || value_ > 1) {
            throw std::domain_error("ExactProb: value " + to_string(value_) + " outside [0, 1]");
        }
    }

    Rational value_{0};
};

}  // namespace ecs

#endif  // ECS_RATIONAL_HPP
