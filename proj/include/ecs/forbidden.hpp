#ifndef ECS_FORBIDDEN_HPP
#define ECS_FORBIDDEN_HPP

#include "ecs/bitstring.hpp"
#include "ecs/distribution.hpp"
#include "ecs/random.hpp"
#include "ecs/rational.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

namespace ecs::forbidden {

// ============================================================================
// Counting primitives
// ============================================================================

/// True iff count <= floor(2^(alpha*i)), i.e. count^q <= 2^(a*i) for alpha = a/q.
inline bool fits_size_bound(const BigInt& count, const Rational& alpha, std::uint64_t i) {
    if (count <= 0) return true;
    const BigInt a = numerator_of(alpha);
    const auto q = denominator_of(alpha).convert_to<unsigned>();
    const BigInt exponent = a * i;
    const auto bits = static_cast<std::uint64_t>(boost::multiprecision::msb(count)) + 1;
    // count in [2^(bits-1), 2^bits)
    if (BigInt(bits) * q <= exponent) return true;
    if (BigInt(bits - 1) * q > exponent) return false;
    return big_pow(count, q) <= pow2(exponent.convert_to<std::uint64_t>());
}

inline BigInt size_bound(const Rational& alpha, std::uint64_t i) { return floor_pow2(alpha, i); }

/// Number of maps from p positions onto exactly j values.
inline BigInt surjections(std::uint64_t p, std::uint64_t j) {
    if (j > p) return 0;
    if (j == 0) return p == 0 ? 1 : 0;
    BigInt total = 0;
    for (std::uint64_t i = 0; i <= j; ++i) {
        BigInt term = binom(j, i) * big_pow(BigInt(j - i), p);
        if (i % 2 == 0) {
            total += term;
        } else {
            total -= term;
        }
    }
    return total;
}

/// Surjection counts S(p, j) for j <= width, advanced one p at a time with
/// S(p, j) = j (S(p-1, j) + S(p-1, j-1)).
class SurjectionRow {
public:
    explicit SurjectionRow(std::uint64_t width) : row_(width + 1, 0) { row_[0] = 1; }

    void advance() {
        for (std::size_t j = row_.size() - 1; j >= 1; --j) row_[j] = BigInt(j) * (row_[j] + row_[j - 1]);
        row_[0] = 0;
        ++p_;
    }

    std::uint64_t p() const noexcept { return p_; }
    const BigInt& operator[](std::size_t j) const { return row_.at(j); }
    std::size_t width() const noexcept { return row_.size() - 1; }

private:
    std::vector<BigInt> row_;
    std::uint64_t p_ = 0;
};

/// Distinct length-n windows of x at every offset, as sorted numerals (n <= 64).
inline std::vector<std::uint64_t> distinct_window_values(const BitString& x, std::size_t n) {
    if (n > 64) throw std::invalid_argument("distinct_window_values: n exceeds 64");
    if (n > x.size()) throw std::invalid_argument("distinct_window_values: n exceeds string length");
    std::vector<std::uint64_t> values;
    values.reserve(x.size() - n + 1);
    const std::uint64_t mask = n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        v = ((v << 1) | static_cast<std::uint64_t>(x[i])) & mask;
        if (i + 1 >= n) values.push_back(v);
    }
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    return values;
}

/// Distinct length-n windows of x at every offset.
inline std::vector<BitString> distinct_windows(const BitString& x, std::size_t n) {
    std::vector<BitString> out;
    if (n <= 64) {
        for (auto v : distinct_window_values(x, n)) out.push_back(BitString::from_value(v, n));
        return out;
    }
    if (n > x.size()) throw std::invalid_argument("distinct_windows: n exceeds string length");
    std::unordered_set<BitString> seen;
    for (std::size_t k = 0; k + n <= x.size(); ++k) seen.insert(x.window(k, n));
    out.assign(seen.begin(), seen.end());
    std::sort(out.begin(), out.end());
    return out;
}

inline std::uint64_t distinct_substrings(const BitString& x, std::size_t n) {
    if (n > x.size()) {
        throw std::invalid_argument("distinct_substrings: n = " + std::to_string(n) + " exceeds length " +
                                    std::to_string(x.size()));
    }
    if (n <= 64) return distinct_window_values(x, n).size();
    return distinct_windows(x, n).size();
}

/// Number of distinct aligned n-blocks of x.
inline std::uint64_t distinct_blocks(const BitString& x, std::size_t n) {
    if (n == 0 || x.size() % n != 0) {
        throw std::invalid_argument("block length " + std::to_string(n) + " does not divide " + std::to_string(x.size()));
    }
    std::set<BitString> blocks;
    for (std::size_t k = 0; k < x.size(); k += n) blocks.insert(x.window(k, n));
    return blocks.size();
}

inline bool is_simple(const BitString& x, std::size_t n, const BigInt& threshold) {
    return BigInt(distinct_blocks(x, n)) <= threshold;
}

/// N-bit strings whose aligned n-blocks take at most t distinct values:
/// sum_{j=1..t} C(2^n, j) surj(N/n, j).
inline BigInt count_simple(std::uint64_t N, std::uint64_t n, const BigInt& t) {
    if (n == 0 || N % n != 0) throw std::invalid_argument("count_simple: n must divide N");
    const std::uint64_t p = N / n;
    const BigInt cube = pow2(n);
    BigInt total = 0;
    const BigInt top = std::min<BigInt>(t, BigInt(p));
    for (std::uint64_t j = 1; BigInt(j) <= top; ++j) total += binom(cube, j) * surjections(p, j);
    return total;
}

/// C(pool - d, s) / C(pool, s): a uniform s-subset of a pool misses d fixed elements.
inline ExactProb miss_probability(const BigInt& pool, const BigInt& d, const BigInt& s) {
    if (d < 0 || s < 0 || d > pool || s > pool) throw std::invalid_argument("miss_probability: arguments out of range");
    if (d == 0 || s == 0) return ExactProb::one();
    if (d > pool - s) return ExactProb::zero();
    BigInt num = 1;
    BigInt den = 1;
    for (BigInt i = 0; i < s; ++i) {
        num *= pool - d - i;
        den *= pool - i;
    }
    return ExactProb(num, den);
}

inline ExactProb miss_probability_random_set(const BigInt& d, std::uint64_t n, const BigInt& s) {
    return miss_probability(pow2(n), d, s);
}

// ============================================================================
// Recursively simple strings
// ============================================================================

inline BitString bits_of(const BigInt& value, std::size_t n) {
    BitString out(n);
    for (std::size_t i = 0; i < n; ++i) out.set(n - 1 - i, boost::multiprecision::bit_test(value, static_cast<unsigned>(i)));
    return out;
}

/// Lengths n_1 < ... < n_k, each dividing the next, and thresholds t_1..t_{k-1}.
/// S_1 is every n_1-bit string; S_{j+1} holds the n_{j+1}-bit strings whose aligned
/// n_j-blocks all lie in S_j and take at most t_j distinct values.
struct SimpleChain {
    std::vector<std::uint64_t> lengths;
    std::vector<BigInt> thresholds;

    SimpleChain() = default;
    SimpleChain(std::vector<std::uint64_t> ls, std::vector<BigInt> ts) : lengths(std::move(ls)), thresholds(std::move(ts)) {
        validate();
    }

    static SimpleChain cube(std::uint64_t n) { return SimpleChain({n}, {}); }

    void validate() const {
        if (lengths.empty()) throw std::invalid_argument("SimpleChain: no lengths");
        if (thresholds.size() + 1 != lengths.size()) throw std::invalid_argument("SimpleChain: need one threshold per step");
        if (lengths[0] == 0) throw std::invalid_argument("SimpleChain: zero length");
        for (std::size_t j = 1; j < lengths.size(); ++j) {
            if (lengths[j] <= lengths[j - 1] || lengths[j] % lengths[j - 1] != 0) {
                throw std::invalid_argument("SimpleChain: lengths must increase and each divide the next");
            }
            if (thresholds[j - 1] < 1) throw std::invalid_argument("SimpleChain: thresholds must be >= 1");
        }
    }

    std::uint64_t length() const { return lengths.back(); }
    std::size_t depth() const { return lengths.size(); }
    bool is_cube() const { return lengths.size() == 1; }

    SimpleChain prefix(std::size_t levels) const {
        if (levels == 0 || levels > lengths.size()) throw std::out_of_range("SimpleChain::prefix");
        return SimpleChain({lengths.begin(), lengths.begin() + static_cast<std::ptrdiff_t>(levels)},
                           {thresholds.begin(), thresholds.begin() + static_cast<std::ptrdiff_t>(levels - 1)});
    }

    bool contains(const BitString& x) const { return contains_at(x, lengths.size() - 1); }

    /// |S_k|, from |S_{j+1}| = sum_{i <= t_j} C(|S_j|, i) surj(n_{j+1}/n_j, i).
    BigInt size() const { return size_at(lengths.size() - 1); }

    BigInt size_at(std::size_t level) const {
        BigInt pool = pow2(lengths[0]);
        for (std::size_t j = 1; j <= level; ++j) {
            const std::uint64_t p = lengths[j] / lengths[j - 1];
            BigInt next = 0;
            const BigInt top = std::min<BigInt>(thresholds[j - 1], BigInt(p));
            for (std::uint64_t i = 1; BigInt(i) <= top; ++i) next += binom(pool, i) * surjections(p, i);
            pool = std::move(next);
        }
        return pool;
    }

    /// Bijection [0, size()) -> S_k. The order is fixed but otherwise arbitrary.
    BitString unrank(const BigInt& index) const { return unrank_at(index, lengths.size() - 1); }

private:
    bool contains_at(const BitString& x, std::size_t level) const {
        if (x.size() != lengths[level]) return false;
        if (level == 0) return true;
        const std::uint64_t n = lengths[level - 1];
        std::set<BitString> blocks;
        for (std::size_t k = 0; k < x.size(); k += n) {
            auto [it, fresh] = blocks.insert(x.window(k, n));
            if (fresh) {
                if (BigInt(blocks.size()) > thresholds[level - 1]) return false;
                if (!contains_at(*it, level - 1)) return false;
            }
        }
        return true;
    }

    BitString unrank_at(BigInt index, std::size_t level) const {
        if (level == 0) return bits_of(index, lengths[0]);
        const std::uint64_t n = lengths[level - 1];
        const std::uint64_t p = lengths[level] / n;
        const BigInt pool = size_at(level - 1);
        const BigInt top = std::min<BigInt>(thresholds[level - 1], BigInt(p));
        std::uint64_t k = 1;
        for (;; ++k) {
            if (BigInt(k) > top) throw std::out_of_range("SimpleChain::unrank: index out of range");
            const BigInt surj = surjections(p, k);
            const BigInt block = binom(pool, k) * surj;
            if (index < block) break;
            index -= block;
        }
        const BigInt surj = surjections(p, k);
        const BigInt combo = index / surj;
        const BigInt assignment = index % surj;

        // Colex unranking of a k-subset of [0, pool).
        std::vector<BigInt> members(k);
        BigInt rest = combo;
        BigInt upper = pool;
        for (std::uint64_t i = k; i >= 1; --i) {
            BigInt lo = i - 1;
            BigInt hi = upper - 1;
            while (lo < hi) {
                BigInt mid = (lo + hi + 1) / 2;
                if (binom(mid, i) <= rest) {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            members[i - 1] = lo;
            rest -= binom(lo, i);
            upper = lo;
        }

        // Position-by-position unranking of a surjection onto k values; ways(r, u)
        // counts fillings of r positions that cover the k - u values not yet used.
        auto ways = [k](std::uint64_t r, std::uint64_t used) {
            const std::uint64_t unused = k - used;
            BigInt total = 0;
            for (std::uint64_t i = 0; i <= unused; ++i) {
                BigInt term = binom(unused, i) * big_pow(BigInt(k - i), r);
                if (i % 2 == 0) {
                    total += term;
                } else {
                    total -= term;
                }
            }
            return total;
        };
        std::vector<std::uint64_t> values(p);
        std::vector<bool> used(k, false);
        std::uint64_t used_count = 0;
        BigInt r = assignment;
        for (std::uint64_t pos = 0; pos < p; ++pos) {
            bool placed = false;
            for (std::uint64_t v = 0; v < k; ++v) {
                const std::uint64_t next_used = used_count + (used[v] ? 0 : 1);
                const BigInt w = ways(p - pos - 1, next_used);
                if (r < w) {
                    values[pos] = v;
                    if (!used[v]) {
                        used[v] = true;
                        ++used_count;
                    }
                    placed = true;
                    break;
                }
                r -= w;
            }
            if (!placed) throw std::logic_error("SimpleChain::unrank: surjection index out of range");
        }

        std::vector<BitString> blocks;
        blocks.reserve(k);
        for (const auto& m : members) blocks.push_back(unrank_at(m, level - 1));
        BitString out;
        for (auto v : values) out.append(blocks[v]);
        return out;
    }
};

// ============================================================================
// Families
// ============================================================================

/// Uniform size-s subset of the pool, via Floyd's algorithm over pool indices.
inline std::vector<BitString> sample_from_pool(const SimpleChain& pool, const BigInt& s, RandomSource& rs) {
    const BigInt size = pool.size();
    if (s < 0 || s > size) {
        throw std::invalid_argument("sample size " + s.str() + " exceeds pool of " + size.str() + " strings of length " +
                                    std::to_string(pool.length()));
    }
    std::set<BigInt> chosen;
    for (BigInt j = size - s; j < size; ++j) {
        BigInt t = rs.uniform_below(BigInt(j + 1));
        if (!chosen.insert(t).second) chosen.insert(j);
    }
    std::vector<BitString> out;
    out.reserve(chosen.size());
    for (const auto& idx : chosen) out.push_back(pool.unrank(idx));
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<BitString> sample_uniform_set(std::uint64_t n, const BigInt& s, RandomSource& rs) {
    if (s > pow2(n)) throw std::invalid_argument("sample_uniform_set: s exceeds 2^n");
    return sample_from_pool(SimpleChain::cube(n), s, rs);
}

/// A deterministic explicit set.
struct FixedLevel {
    std::vector<BitString> strings;
};

/// Explicit set drawn uniformly (size `sample_size`) from `pool`; the model is
/// kept so hit probabilities over the draw can be computed exactly.
struct SampledLevel {
    SimpleChain pool;
    BigInt sample_size;
    std::vector<BitString> strings;
};

/// Predicate-backed set of every string in `predicate`, with its exact cardinality.
struct ImplicitLevel {
    SimpleChain predicate;
    BigInt cardinality;
};

using LevelSet = std::variant<FixedLevel, SampledLevel, ImplicitLevel>;

/// Per-length forbidden sets A_i with |A_i| <= floor(2^(alpha i)).
class LevelFamily {
public:
    LevelFamily() = default;
    explicit LevelFamily(Rational alpha) : alpha_(std::move(alpha)) {
        if (alpha_ <= 0 || alpha_ > 1) throw std::invalid_argument("LevelFamily: alpha must lie in (0, 1]");
    }

    void add_level(std::uint64_t length, LevelSet set) {
        if (length == 0) throw std::invalid_argument("LevelFamily: zero-length level");
        if (levels_.count(length) != 0) throw std::invalid_argument("LevelFamily: duplicate level " + std::to_string(length));
        std::visit(
            [&](auto& lv) {
                using T = std::decay_t<decltype(lv)>;
                if constexpr (std::is_same_v<T, ImplicitLevel>) {
                    if (lv.predicate.length() != length) throw std::invalid_argument("LevelFamily: predicate length mismatch");
                } else {
                    std::sort(lv.strings.begin(), lv.strings.end());
                    if (std::adjacent_find(lv.strings.begin(), lv.strings.end()) != lv.strings.end()) {
                        throw std::invalid_argument("LevelFamily: duplicate string at level " + std::to_string(length));
                    }
                    auto& index = index_[length];
                    for (const auto& s : lv.strings) {
                        if (s.size() != length) {
                            throw std::invalid_argument("LevelFamily: string of length " + std::to_string(s.size()) +
                                                        " at level " + std::to_string(length));
                        }
                        index.insert(s);
                    }
                    if constexpr (std::is_same_v<T, SampledLevel>) {
                        if (lv.pool.length() != length) throw std::invalid_argument("LevelFamily: pool length mismatch");
                        if (BigInt(lv.strings.size()) != lv.sample_size) {
                            throw std::invalid_argument("LevelFamily: sample size does not match drawn strings");
                        }
                    }
                }
            },
            set);
        levels_.emplace(length, std::move(set));
    }

    const Rational& alpha() const noexcept { return alpha_; }
    const std::map<std::uint64_t, LevelSet>& levels() const noexcept { return levels_; }
    bool empty() const noexcept { return levels_.empty(); }
    std::uint64_t top_length() const {
        if (levels_.empty()) throw std::logic_error("LevelFamily: no levels");
        return levels_.rbegin()->first;
    }

    BigInt cardinality(std::uint64_t length) const {
        auto it = levels_.find(length);
        if (it == levels_.end()) return 0;
        return std::visit(
            [](const auto& lv) -> BigInt {
                if constexpr (std::is_same_v<std::decay_t<decltype(lv)>, ImplicitLevel>) {
                    return lv.cardinality;
                } else {
                    return BigInt(lv.strings.size());
                }
            },
            it->second);
    }

    bool level_fits_bound(std::uint64_t length) const { return fits_size_bound(cardinality(length), alpha_, length); }

    bool all_levels_fit_bound() const {
        for (const auto& [len, lv] : levels_) {
            if (!level_fits_bound(len)) return false;
        }
        return true;
    }

    /// w in A_{|w|}.
    bool contains(const BitString& w) const {
        auto it = levels_.find(w.size());
        if (it == levels_.end()) return false;
        if (const auto* imp = std::get_if<ImplicitLevel>(&it->second)) return imp->predicate.contains(w);
        auto idx = index_.find(w.size());
        return idx != index_.end() && idx->second.count(w) != 0;
    }

    /// Some substring of x lies in the family (a concrete, deterministic check).
    bool hits(const BitString& x) const {
        for (const auto& [len, lv] : levels_) {
            if (len > x.size()) break;
            for (const auto& w : distinct_windows(x, len)) {
                if (contains(w)) return true;
            }
        }
        return false;
    }

private:
    Rational alpha_{1, 2};
    std::map<std::uint64_t, LevelSet> levels_;
    std::unordered_map<std::uint64_t, std::unordered_set<BitString>> index_;
};

/// Exact probability, over the draws of the sampled levels, that some level
/// meets a substring of x. Levels are drawn independently, so the miss
/// probabilities multiply; fixed and implicit levels are deterministic.
inline ExactProb hit_probability(const BitString& x, const LevelFamily& fam) {
    if (fam.empty() || x.size() != fam.top_length()) {
        throw std::invalid_argument("hit_probability: string length " + std::to_string(x.size()) +
                                    " does not match top level " + (fam.empty() ? std::string("(none)") : std::to_string(fam.top_length())));
    }
    Rational miss = 1;
    for (const auto& [len, lv] : fam.levels()) {
        const auto windows = distinct_windows(x, len);
        if (const auto* sampled = std::get_if<SampledLevel>(&lv)) {
            BigInt d = 0;
            for (const auto& w : windows) {
                if (sampled->pool.contains(w)) ++d;
            }
            miss *= miss_probability(sampled->pool.size(), d, sampled->sample_size).value();
        } else {
            for (const auto& w : windows) {
                if (fam.contains(w)) return ExactProb::one();
            }
        }
        if (miss == 0) return ExactProb::one();
    }
    return ExactProb(Rational(1) - miss);
}

// ============================================================================
// Two-level and layered constructions
// ============================================================================

inline std::uint64_t half_up(std::uint64_t n) { return (n + 1) / 2; }

struct LevelCertificate {
    std::uint64_t length = 0;
    BigInt cardinality;
    BigInt bound;
    bool fits = false;
};

struct TwoLevelCertificate {
    Rational alpha;
    ExactProb epsilon;
    std::uint64_t n = 0;
    std::uint64_t N = 0;
    BigInt threshold;      // 2^ceil(n/2)
    BigInt sample_size;    // floor(2^(alpha n))
    Rational miss_bound;   // (1 - 2^-ceil(n/2))^sample_size, < epsilon
    ExactProb worst_miss;  // exact miss for d = threshold + 1
    std::vector<LevelCertificate> levels;
};

inline LevelCertificate certify_level(const LevelFamily& fam, std::uint64_t length) {
    LevelCertificate c;
    c.length = length;
    c.cardinality = fam.cardinality(length);
    c.bound = size_bound(fam.alpha(), length);
    c.fits = fam.level_fits_bound(length);
    return c;
}

/// (1 - 2^-ceil(n/2))^floor(2^(alpha n)).
inline Rational two_level_miss_bound(const Rational& alpha, std::uint64_t n) {
    const std::uint64_t h = half_up(n);
    const BigInt s = size_bound(alpha, n);
    const BigInt den = pow2(h);
    const auto e = s.convert_to<std::uint64_t>();
    return Rational(big_pow(den - 1, e), big_pow(den, e));
}

/// Smallest multiple N = p n (p >= 2) with count_simple(N, n, t) <= floor(2^(alpha N)).
inline std::uint64_t choose_top_length(const Rational& alpha, std::uint64_t n, const BigInt& t,
                                       std::uint64_t max_blocks = 1'000'000) {
    const BigInt cube = pow2(n);
    const std::uint64_t width = std::min<BigInt>(t, BigInt(max_blocks)).convert_to<std::uint64_t>();
    std::vector<BigInt> choose(width + 1);
    for (std::uint64_t j = 1; j <= width; ++j) choose[j] = binom(cube, j);
    SurjectionRow row(width);
    row.advance();
    for (std::uint64_t p = 2; p <= max_blocks; ++p) {
        row.advance();
        BigInt total = 0;
        for (std::uint64_t j = 1; j <= std::min<std::uint64_t>(width, p); ++j) total += choose[j] * row[j];
        if (fits_size_bound(total, alpha, p * n)) return p * n;
    }
    throw std::runtime_error("choose_top_length: no admissible N within " + std::to_string(max_blocks) + " blocks");
}

struct TwoLevelResult {
    LevelFamily family;
    TwoLevelCertificate certificate;
};

inline TwoLevelResult two_level_family(const Rational& alpha, const ExactProb& epsilon, std::uint64_t n_min, RandomSource& rs) {
    if (alpha <= Rational(1, 2) || alpha >= 1) throw std::invalid_argument("two_level_family: alpha must lie in (1/2, 1)");
    if (epsilon.value() <= 0) throw std::invalid_argument("two_level_family: epsilon must be positive");
    std::uint64_t n = std::max<std::uint64_t>(n_min, 1);
    for (;; ++n) {
        if (n > 62) throw std::runtime_error("two_level_family: no admissible n up to 62");
        if (two_level_miss_bound(alpha, n) < epsilon.value()) break;
    }
    const BigInt t = pow2(half_up(n));
    const std::uint64_t N = choose_top_length(alpha, n, t);
    const BigInt s = size_bound(alpha, n);

    LevelFamily fam(alpha);
    RandomSource stream = rs.substream(n);
    fam.add_level(n, SampledLevel{SimpleChain::cube(n), s, sample_uniform_set(n, s, stream)});
    SimpleChain top({n, N}, {t});
    fam.add_level(N, ImplicitLevel{top, count_simple(N, n, t)});

    TwoLevelCertificate cert;
    cert.alpha = alpha;
    cert.epsilon = epsilon;
    cert.n = n;
    cert.N = N;
    cert.threshold = t;
    cert.sample_size = s;
    cert.miss_bound = two_level_miss_bound(alpha, n);
    cert.worst_miss = miss_probability_random_set(std::min<BigInt>(t + 1, pow2(n)), n, s);
    cert.levels = {certify_level(fam, n), certify_level(fam, N)};
    return {std::move(fam), std::move(cert)};
}

struct LayeredParams {
    Rational alpha;
    ExactProb epsilon;
    std::vector<std::uint64_t> lengths;  // n_1 < ... < n_{t+1}
    std::vector<BigInt> thresholds;      // one per random level

    void validate() const {
        SimpleChain(lengths, thresholds).validate();
        if (lengths.size() < 2) throw std::invalid_argument("LayeredParams: need at least two lengths");
        if (alpha >= 1 || alpha * Rational(BigInt(lengths.size())) <= 1) {
            throw std::invalid_argument("LayeredParams: " + std::to_string(lengths.size()) + " levels need alpha in (1/" +
                                        std::to_string(lengths.size()) + ", 1), got " + to_string(alpha));
        }
    }

    SimpleChain chain() const { return SimpleChain(lengths, thresholds); }
};

struct LayeredCertificate {
    std::vector<LevelCertificate> levels;
    std::vector<BigInt> pool_sizes;    // per random level
    std::vector<ExactProb> worst_miss; // per random level, with d = threshold + 1
    ExactProb hit_lower_bound;         // 1 - max worst_miss
    bool epsilon_met = false;          // hit_lower_bound > 1 - epsilon
};

struct LayeredResult {
    LevelFamily family;
    LayeredCertificate certificate;
};

/// Random levels n_1..n_t drawn uniformly from the recursively simple pools;
/// the top level is the implicit set of all recursively simple strings.
inline LayeredResult multi_level_family(const LayeredParams& params, RandomSource& rs) {
    params.validate();
    const SimpleChain full = params.chain();
    LevelFamily fam(params.alpha);
    LayeredCertificate cert;
    Rational worst = 0;
    const std::size_t random_levels = params.lengths.size() - 1;
    for (std::size_t j = 0; j < random_levels; ++j) {
        const SimpleChain pool = full.prefix(j + 1);
        const std::uint64_t len = params.lengths[j];
        const BigInt pool_size = pool.size();
        const BigInt s = size_bound(params.alpha, len);
        if (s > pool_size) {
            throw std::invalid_argument("multi_level_family: level " + std::to_string(len) + " needs " + s.str() +
                                        " strings but its simple pool has only " + pool_size.str());
        }
        RandomSource stream = rs.substream(j);
        fam.add_level(len, SampledLevel{pool, s, sample_from_pool(pool, s, stream)});
        const BigInt d = std::min<BigInt>(params.thresholds[j] + 1, pool_size);
        const ExactProb w = miss_probability(pool_size, d, s);
        worst = std::max(worst, w.value());
        cert.pool_sizes.push_back(pool_size);
        cert.worst_miss.push_back(w);
    }
    fam.add_level(full.length(), ImplicitLevel{full, full.size()});
    for (const auto& [len, lv] : fam.levels()) cert.levels.push_back(certify_level(fam, len));
    cert.hit_lower_bound = ExactProb(Rational(1) - worst);
    cert.epsilon_met = worst < params.epsilon.value();
    return {std::move(fam), std::move(cert)};
}

// ============================================================================
// Derandomization and interval schedule
// ============================================================================

/// Exact P-probability that a sample avoids the family; deficit mass counts as avoiding.
inline ExactProb family_avoid_probability(const FiniteDistribution& P, const LevelFamily& fam) {
    Rational total = P.deficit();
    for (const auto& [x, m] : P.masses()) {
        if (!fam.hits(x)) total += m;
    }
    return ExactProb(total);
}

/// Average over the family's draws of the avoid probability.
inline ExactProb averaged_avoid_probability(const FiniteDistribution& P, const LevelFamily& model) {
    Rational total = P.deficit();
    for (const auto& [x, m] : P.masses()) total += m * hit_probability(x, model).complement().value();
    return ExactProb(total);
}

struct DerandomizedFamily {
    LevelFamily family;
    ExactProb avoid_probability;
    ExactProb averaged_bound;
    std::uint64_t stream_index = 0;  // substream of the caller's source that produced the family
};

inline DerandomizedFamily derandomize_family(const FiniteDistribution& P, const LayeredParams& params, RandomSource& rs,
                                             std::uint64_t max_attempts = 1'000'000) {
    params.validate();
    if (P.length() != params.lengths.back()) {
        throw std::invalid_argument("derandomize_family: distribution length " + std::to_string(P.length()) +
                                    " does not match top level " + std::to_string(params.lengths.back()));
    }
    RandomSource first_stream = rs.substream(0);
    const LevelFamily model = multi_level_family(params, first_stream).family;
    const ExactProb averaged = averaged_avoid_probability(P, model);
    if (!(averaged < params.epsilon)) {
        throw std::invalid_argument("derandomize_family: averaged avoid probability " + averaged.str() +
                                    " is not below epsilon " + params.epsilon.str() + "; enlarge the parameters");
    }
    for (std::uint64_t k = 0; k < max_attempts; ++k) {
        RandomSource stream = rs.substream(k);
        LayeredResult candidate = multi_level_family(params, stream);
        ExactProb avoid = family_avoid_probability(P, candidate.family);
        if (avoid < params.epsilon) return {std::move(candidate.family), avoid, averaged, k};
    }
    throw std::runtime_error("derandomize_family: no family found within " + std::to_string(max_attempts) + " draws");
}

struct ScheduledInterval {
    std::uint64_t index = 0;  // 1-based
    std::uint64_t n = 0;
    std::uint64_t N = 0;
    BigInt threshold;
    ExactProb epsilon;
    DerandomizedFamily result;
};

struct ScheduleOptions {
    std::uint64_t min_length = 1;
    std::uint64_t max_length = 16;
};

/// Disjoint intervals (n_i, N_i) with epsilon_i = 2^-i, each with a derandomized
/// two-level family against dist(N_i). Parameters per interval are the first
/// (N, n, threshold) in increasing order whose size certificate and averaged
/// bound both hold.
inline std::vector<ScheduledInterval> interval_schedule(const std::function<FiniteDistribution(std::uint64_t)>& dist,
                                                        const Rational& alpha, std::uint64_t count, RandomSource& rs,
                                                        const ScheduleOptions& opts = {}) {
    if (count < 1) throw std::invalid_argument("interval_schedule: count must be >= 1");
    std::vector<ScheduledInterval> out;
    std::uint64_t lo = std::max<std::uint64_t>(opts.min_length, 1);
    for (std::uint64_t i = 1; i <= count; ++i) {
        const ExactProb eps(Rational(1, pow2(i)));
        std::optional<ScheduledInterval> found;
        for (std::uint64_t N = 2 * lo; N <= opts.max_length && !found; ++N) {
            const FiniteDistribution P = dist(N);
            for (std::uint64_t n = lo; 2 * n <= N && !found; ++n) {
                if (N % n != 0) continue;
                const BigInt s = size_bound(alpha, n);
                if (s < 1 || s > pow2(n)) continue;
                // (aligned distinct, overlapping distinct) -> mass
                std::map<std::pair<std::uint64_t, std::uint64_t>, Rational> profile;
                for (const auto& [x, m] : P.masses()) profile[{distinct_blocks(x, n), distinct_substrings(x, n)}] += m;
                for (BigInt t = 1; t < pow2(n) && !found; ++t) {
                    if (!fits_size_bound(count_simple(N, n, t), alpha, N)) break;
                    Rational avg = P.deficit();
                    for (const auto& [key, m] : profile) {
                        if (BigInt(key.first) <= t) continue;
                        avg += m * miss_probability_random_set(BigInt(key.second), n, s).value();
                    }
                    if (avg >= eps.value()) continue;
                    LayeredParams params{alpha, eps, {n, N}, {t}};
                    RandomSource stream = rs.substream(i);
                    found = ScheduledInterval{i, n, N, t, eps, derandomize_family(P, params, stream)};
                }
            }
        }
        if (!found) {
            throw std::runtime_error("interval_schedule: no admissible interval " + std::to_string(i) + " starting at length " +
                                     std::to_string(lo) + " within max length " + std::to_string(opts.max_length));
        }
        lo = found->N + 1;
        out.push_back(std::move(*found));
    }
    return out;
}

}  // namespace ecs::forbidden

#endif  // ECS_FORBIDDEN_HPP
