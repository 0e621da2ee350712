#ifndef ECS_SPREADER_HPP
#define ECS_SPREADER_HPP

#include "ecs/bitstring.hpp"
#include "ecs/random.hpp"
#include "ecs/rational.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace ecs::spreader {

// ============================================================================
// Weight series
// ============================================================================

/// Computable series a_m >= 0 together with a certified tail bound
/// tail_bound(M) >= sum_{m >= M} a_m.
class WeightSeries {
public:
    using Fn = std::function<Rational(std::uint64_t)>;

    WeightSeries(std::string name, Fn term, Fn tail_bound, std::optional<Rational> ratio = std::nullopt)
        : name_(std::move(name)), term_(std::move(term)), tail_(std::move(tail_bound)), ratio_(std::move(ratio)) {}

    static WeightSeries zero() {
        return {"zero", [](std::uint64_t) { return Rational(0); }, [](std::uint64_t) { return Rational(0); }};
    }

    /// a_m = 1/(m(m+1)) for m >= 1 (a_0 = 0); the tail from M >= 1 telescopes to 1/M.
    static WeightSeries inverse_triangular() {
        return {"inverse-triangular",
                [](std::uint64_t m) { return m == 0 ? Rational(0) : Rational(1, BigInt(m) * (m + 1)); },
                [](std::uint64_t M) { return M == 0 ? Rational(1) : Rational(1, BigInt(M)); }};
    }

    /// a_m = r^m with tail r^M / (1 - r); 0 <= r < 1.
    static WeightSeries geometric(const Rational& r) {
        if (r < 0 || r >= 1) throw std::invalid_argument("geometric weights need 0 <= r < 1, got " + to_string(r));
        return {"geometric",
                [r](std::uint64_t m) { return rational_pow(r, m); },
                [r](std::uint64_t M) { return rational_pow(r, M) / (Rational(1) - r); },
                r};
    }

    static WeightSeries from_preset(const std::string& name, const std::optional<Rational>& ratio = std::nullopt) {
        if (name == "zero") return zero();
        if (name == "inverse-triangular") return inverse_triangular();
        if (name == "geometric") {
            if (!ratio) throw std::invalid_argument("preset 'geometric' needs a ratio");
            return geometric(*ratio);
        }
        throw std::invalid_argument("unknown weight preset '" + name + "'");
    }

    const std::string& name() const noexcept { return name_; }
    const std::optional<Rational>& ratio() const noexcept { return ratio_; }
    Rational term(std::uint64_t m) const { return term_(m); }
    Rational tail_bound(std::uint64_t M) const { return tail_(M); }

private:
    std::string name_;
    Fn term_;
    Fn tail_;
    std::optional<Rational> ratio_;
};

/// Number of progressions given to level m: ceil(a_m 2^m + m^2).
inline std::uint64_t level_count(const WeightSeries& w, std::uint64_t m) {
    const Rational raw = w.term(m) * Rational(pow2(m)) + Rational(BigInt(m) * m);
    const BigInt c = ceil_of(raw);
    if (c > BigInt(std::numeric_limits<std::uint64_t>::max())) throw std::overflow_error("level_count: count overflows");
    return c.convert_to<std::uint64_t>();
}

/// tail_bound(M) + sum_{m>=M} (m^2 + 1)/2^m, using
/// sum_{m>=M} m^2/2^m = (2M^2+4M+6)/2^M and sum_{m>=M} 1/2^m = 2^(1-M).
inline Rational m0_certificate(const WeightSeries& w, std::uint64_t M) {
    const BigInt M2 = BigInt(M) * M;
    const Rational boost(2 * M2 + 4 * BigInt(M) + 6, pow2(M));
    const Rational slack(2, pow2(M));
    return w.tail_bound(M) + boost + slack;
}

inline bool m0_certified(const WeightSeries& w, std::uint64_t M) { return m0_certificate(w, M) <= 1; }

/// Smallest M whose certificate is <= 1.
inline std::uint64_t choose_m0(const WeightSeries& w) {
    constexpr std::uint64_t kSearchLimit = 4096;
    for (std::uint64_t M = 0; M < kSearchLimit; ++M) {
        if (m0_certified(w, M)) return M;
    }
    throw std::runtime_error("choose_m0: no certified level below " + std::to_string(kSearchLimit) +
                             "; tail bound of '" + w.name() + "' does not vanish");
}

// ============================================================================
// Allocation
// ============================================================================

struct InconsistentWindow : std::runtime_error {
    InconsistentWindow(std::uint64_t source, std::uint64_t first, std::uint64_t second)
        : std::runtime_error("inconsistent reads of source bit " + std::to_string(source) + " at window offsets " +
                             std::to_string(first) + " and " + std::to_string(second)),
          source_bit(source), offset_a(first), offset_b(second) {}
    std::uint64_t source_bit;
    std::uint64_t offset_a;
    std::uint64_t offset_b;
};

struct UncoveredPosition : std::runtime_error {
    UncoveredPosition(std::uint64_t pos, unsigned level)
        : std::runtime_error("position " + std::to_string(pos) + " is not covered by levels up to " +
                             std::to_string(level) + "; a higher level is required"),
          position(pos), reached_level(level) {}
    std::uint64_t position;
    unsigned reached_level;
};

/// Placement of source bits on arithmetic progressions with difference 2^m.
///
/// Levels are filled in increasing order. The progressions still free at
/// level m are exactly the residue classes mod 2^m of the numbers not yet
/// covered, so "take the count_m free progressions with smallest first term"
/// is the same as "take the count_m smallest uncovered numbers", which is how
/// the assignment is computed here.
class Allocation {
public:
    using CountFn = std::function<std::uint64_t(unsigned)>;

    static constexpr unsigned kLevelLimit = 62;

    /// Certified plan: requires the m0 certificate, counts from level_count.
    static Allocation plan(const WeightSeries& w, unsigned m0, unsigned max_level) {
        if (!m0_certified(w, m0)) {
            throw std::invalid_argument("plan_allocation: m0 = " + std::to_string(m0) + " fails the budget certificate (" +
                                        to_string(m0_certificate(w, m0)) + " > 1); smallest certified m0 is " +
                                        std::to_string(choose_m0(w)));
        }
        Allocation a(m0, [w](unsigned m) { return level_count(w, m); });
        a.weights_name_ = w.name();
        a.weights_ratio_ = w.ratio();
        a.extend_to_level(max_level);
        return a;
    }

    /// Hand-specified counts for toy allocations; levels absent from the map get zero.
    /// Never certified.
    static Allocation plan_test_mode(std::map<unsigned, std::uint64_t> counts, unsigned m0, unsigned max_level) {
        Allocation a(m0, [counts = std::move(counts)](unsigned m) {
            auto it = counts.find(m);
            return it == counts.end() ? std::uint64_t{0} : it->second;
        });
        a.test_mode_ = true;
        a.extend_to_level(max_level);
        return a;
    }

    /// Rebuilds an allocation from explicit per-level first terms (level m0 first),
    /// validating difference, range and disjointness. The result cannot be extended.
    static Allocation from_first_terms(unsigned m0, const std::vector<std::vector<std::uint64_t>>& levels) {
        Allocation a(m0, nullptr);
        for (std::size_t idx = 0; idx < levels.size(); ++idx) {
            a.assign_level(m0 + static_cast<unsigned>(idx), levels[idx], /*validate=*/true);
        }
        if (levels.empty()) throw std::invalid_argument("allocation must contain at least one level");
        a.recompute_horizon();
        return a;
    }

    unsigned m0() const noexcept { return m0_; }
    /// Highest level processed so far.
    unsigned max_level() const noexcept { return static_cast<unsigned>(m0_ + levels_.size() - 1); }
    bool test_mode() const noexcept { return test_mode_; }
    bool extensible() const noexcept { return static_cast<bool>(count_fn_); }
    const std::string& weights_name() const noexcept { return weights_name_; }
    const std::optional<Rational>& weights_ratio() const noexcept { return weights_ratio_; }

    std::uint64_t count(unsigned m) const { return level(m).first_terms.size(); }
    const std::vector<std::uint64_t>& first_terms(unsigned m) const { return level(m).first_terms; }
    std::uint64_t first_source(unsigned m) const { return level(m).first_source; }

    /// B_m: number of source bits placed at levels <= m.
    std::uint64_t cumulative(unsigned m) const {
        const auto& lv = level(m);
        return lv.first_source + lv.first_terms.size();
    }

    /// Least position not covered by any processed level; max() when everything is covered.
    std::uint64_t horizon() const noexcept { return horizon_; }

    /// sum over processed levels of count_m / 2^m.
    Rational budget_used() const {
        Rational total = 0;
        for (unsigned m = m0_; m <= max_level(); ++m) total += Rational(BigInt(count(m)), pow2(m));
        return total;
    }

    void extend_to_level(unsigned target) {
        if (target < m0_) throw std::invalid_argument("extend_to_level: level below m0");
        while (levels_.empty() || max_level() < target) {
            if (!count_fn_) throw std::logic_error("allocation is not extensible beyond level " + std::to_string(max_level()));
            const unsigned m = levels_.empty() ? m0_ : max_level() + 1;
            if (m > kLevelLimit) throw std::overflow_error("allocation level limit exceeded");
            assign_level(m, select_smallest_uncovered(m, count_fn_(m)), /*validate=*/false);
        }
    }

    /// Extends levels until every position below `end` is covered.
    void extend_to_horizon(std::uint64_t end) {
        while (horizon_ < end) {
            if (!extensible() || max_level() >= kLevelLimit || stalled()) throw UncoveredPosition(horizon_, max_level());
            extend_to_level(max_level() + 1);
        }
    }

    /// f(i) if i is covered by a processed level.
    std::optional<std::uint64_t> find_source(std::uint64_t i) const {
        for (const auto& lv : levels_) {
            auto it = lv.by_residue.find(i & lv.mask);
            if (it != lv.by_residue.end()) return it->second;
        }
        return std::nullopt;
    }

    /// f(i), extending lazily if needed.
    std::uint64_t source_index(std::uint64_t i) {
        if (i >= horizon_) extend_to_horizon(i + 1);
        return *find_source(i);
    }

    std::uint64_t source_index(std::uint64_t i) const {
        auto j = find_source(i);
        if (!j) throw UncoveredPosition(i, max_level());
        return *j;
    }

    /// Level and first term of the progression carrying source bit j.
    std::pair<unsigned, std::uint64_t> placement(std::uint64_t j) const {
        for (std::size_t idx = 0; idx < levels_.size(); ++idx) {
            const auto& lv = levels_[idx];
            if (j >= lv.first_source && j < lv.first_source + lv.first_terms.size()) {
                return {m0_ + static_cast<unsigned>(idx), lv.first_terms[j - lv.first_source]};
            }
        }
        throw std::out_of_range("source bit " + std::to_string(j) + " not placed at processed levels");
    }

private:
    struct Level {
        std::uint64_t mask = 0;
        std::uint64_t first_source = 0;
        std::vector<std::uint64_t> first_terms;
        std::unordered_map<std::uint64_t, std::uint64_t> by_residue;
    };

    Allocation(unsigned m0, CountFn count_fn) : m0_(m0), count_fn_(std::move(count_fn)) {
        if (m0 > kLevelLimit) throw std::invalid_argument("m0 exceeds level limit");
        available_ = BigInt(1) << m0;
    }

    const Level& level(unsigned m) const {
        if (m < m0_ || m > max_level()) throw std::out_of_range("level " + std::to_string(m) + " not processed");
        return levels_[m - m0_];
    }

    bool covered(std::uint64_t p) const { return find_source(p).has_value(); }

    // A stalled allocation (test mode with zero counts ahead) never covers more.
    bool stalled() const {
        if (!test_mode_) return false;
        for (unsigned m = max_level() + 1; m <= std::min(kLevelLimit, max_level() + 64); ++m) {
            if (count_fn_(m) != 0) return false;
        }
        return true;
    }

    std::vector<std::uint64_t> select_smallest_uncovered(unsigned m, std::uint64_t want) const {
        const BigInt free_now = levels_.empty() ? available_ : available_ * 2;
        if (BigInt(want) > free_now) {
            throw std::logic_error("allocation: level " + std::to_string(m) + " needs " + std::to_string(want) +
                                   " progressions but only " + free_now.str() + " are free");
        }
        std::vector<std::uint64_t> picks;
        picks.reserve(want);
        const std::uint64_t limit = std::uint64_t{1} << m;
        for (std::uint64_t p = horizon_; picks.size() < want; ++p) {
            if (p >= limit) throw std::logic_error("allocation: free progression count inconsistent at level " + std::to_string(m));
            if (!covered(p)) picks.push_back(p);
        }
        return picks;
    }

    void assign_level(unsigned m, const std::vector<std::uint64_t>& firsts, bool validate) {
        if (m > kLevelLimit) throw std::overflow_error("allocation level limit exceeded");
        if (!levels_.empty() && m != max_level() + 1) throw std::logic_error("levels must be assigned in order");
        if (!levels_.empty()) available_ *= 2;
        Level lv;
        lv.mask = (std::uint64_t{1} << m) - 1;
        lv.first_source = levels_.empty() ? 0 : cumulative(max_level());
        lv.first_terms = firsts;
        for (std::size_t idx = 0; idx < firsts.size(); ++idx) {
            const std::uint64_t a = firsts[idx];
            if (validate) {
                if (a > lv.mask) {
                    throw std::invalid_argument("level " + std::to_string(m) + ": first term " + std::to_string(a) +
                                                " is not below the difference 2^" + std::to_string(m));
                }
                if (covered(a)) {
                    throw std::invalid_argument("level " + std::to_string(m) + ": progression starting at " +
                                                std::to_string(a) + " overlaps a lower level");
                }
            }
            if (!lv.by_residue.emplace(a, lv.first_source + idx).second) {
                throw std::invalid_argument("level " + std::to_string(m) + ": duplicate progression " + std::to_string(a));
            }
        }
        if (BigInt(firsts.size()) > available_) throw std::logic_error("allocation: level over-assigned");
        available_ -= firsts.size();
        levels_.push_back(std::move(lv));
        if (!validate) advance_horizon();
    }

    void advance_horizon() {
        if (available_ == 0) {
            horizon_ = std::numeric_limits<std::uint64_t>::max();
            return;
        }
        while (covered(horizon_)) ++horizon_;
    }

    void recompute_horizon() {
        horizon_ = 0;
        advance_horizon();
    }

    unsigned m0_;
    CountFn count_fn_;
    bool test_mode_ = false;
    std::string weights_name_;
    std::optional<Rational> weights_ratio_;
    std::vector<Level> levels_;
    BigInt available_;  // free progressions at the current level after assignment
    std::uint64_t horizon_ = 0;
};

// ============================================================================
// Generation and recovery
// ============================================================================

/// omega_i = tau_{f(i)} for i < length.
inline BitString spread(Allocation& alloc, const BitString& tau, std::uint64_t length) {
    if (length > 0) alloc.extend_to_horizon(length);
    BitString out(length);
    for (std::uint64_t i = 0; i < length; ++i) {
        const std::uint64_t j = alloc.source_index(i);
        if (j >= tau.size()) {
            throw std::invalid_argument("spread: source string has " + std::to_string(tau.size()) +
                                        " bits but position " + std::to_string(i) + " needs bit " + std::to_string(j));
        }
        out.set(i, tau[j]);
    }
    return out;
}

/// Number of source bits consumed by the first `length` positions.
inline std::uint64_t required_source_bits(Allocation& alloc, std::uint64_t length) {
    if (length == 0) return 0;
    alloc.extend_to_horizon(length);
    std::uint64_t most = 0;
    for (std::uint64_t i = 0; i < length; ++i) most = std::max(most, alloc.source_index(i));
    return most + 1;
}

/// Spread with tau drawn fresh from the random source.
inline BitString spread(Allocation& alloc, RandomSource& rs, std::uint64_t length) {
    const BitString tau = rs.bits(required_source_bits(alloc, length));
    return spread(alloc, tau, length);
}

/// Reads tau([0, B_m)) out of a window of length 2^m that starts at a position
/// congruent to kmod modulo 2^m. Every copy of a source bit inside the window
/// must agree.
inline BitString recover_prefix(const Allocation& alloc, const BitString& window, std::uint64_t kmod, unsigned m) {
    if (m < alloc.m0() || m > alloc.max_level()) {
        throw std::invalid_argument("recover_prefix: level " + std::to_string(m) + " outside processed range [" +
                                    std::to_string(alloc.m0()) + ", " + std::to_string(alloc.max_level()) + "]");
    }
    if (m >= 63) throw std::invalid_argument("recover_prefix: level too large");
    const std::uint64_t width = std::uint64_t{1} << m;
    if (window.size() != width) {
        throw std::invalid_argument("recover_prefix: window has length " + std::to_string(window.size()) + ", expected 2^" +
                                    std::to_string(m));
    }
    kmod &= width - 1;
    BitString prefix(alloc.cumulative(m));
    for (unsigned lvl = alloc.m0(); lvl <= m; ++lvl) {
        const std::uint64_t diff = std::uint64_t{1} << lvl;
        const auto& firsts = alloc.first_terms(lvl);
        const std::uint64_t base = alloc.first_source(lvl);
        for (std::size_t idx = 0; idx < firsts.size(); ++idx) {
            const std::uint64_t first = (firsts[idx] + width - kmod) & (diff - 1);
            const bool bit = window[first];
            for (std::uint64_t o = first + diff; o < width; o += diff) {
                if (window[o] != bit) throw InconsistentWindow(base + idx, first, o);
            }
            prefix.set(base + idx, bit);
        }
    }
    return prefix;
}

/// Result of checking one window [k, k + 2^m) against the allocation alone.
struct WindowCoverage {
    std::uint64_t k = 0;
    unsigned m = 0;
    std::vector<std::uint64_t> missing;         // j < B_m with no occurrence
    std::vector<std::uint64_t> repeated_top;    // level-m bits seen more than once
    bool ok() const noexcept { return missing.empty() && repeated_top.empty(); }
};

namespace detail {

template <class SourceOf>
WindowCoverage window_coverage(const Allocation& alloc, std::uint64_t k, unsigned m, SourceOf source_of) {
    WindowCoverage result{k, m, {}, {}};
    const std::uint64_t width = std::uint64_t{1} << m;
    const std::uint64_t prefix = alloc.cumulative(m);
    const std::uint64_t top_begin = alloc.first_source(m);
    std::vector<std::uint32_t> seen(prefix, 0);
    for (std::uint64_t p = k; p < k + width; ++p) {
        const std::uint64_t j = source_of(p);
        if (j < prefix) ++seen[j];
    }
    for (std::uint64_t j = 0; j < prefix; ++j) {
        if (seen[j] == 0) result.missing.push_back(j);
        if (j >= top_begin && seen[j] > 1) result.repeated_top.push_back(j);
    }
    return result;
}

}  // namespace detail

inline WindowCoverage check_window_coverage(const Allocation& alloc, std::uint64_t k, unsigned m) {
    return detail::window_coverage(alloc, k, m, [&](std::uint64_t p) { return alloc.source_index(p); });
}

/// f(0..length-1) in one pass, for scans that touch every window.
inline std::vector<std::uint64_t> source_map(const Allocation& alloc, std::uint64_t length) {
    std::vector<std::uint64_t> f(length);
    for (unsigned m = alloc.m0(); m <= alloc.max_level(); ++m) {
        const std::uint64_t diff = std::uint64_t{1} << m;
        const auto& firsts = alloc.first_terms(m);
        for (std::size_t idx = 0; idx < firsts.size(); ++idx) {
            for (std::uint64_t p = firsts[idx]; p < length; p += diff) f[p] = alloc.first_source(m) + idx;
        }
    }
    if (length > alloc.horizon()) throw UncoveredPosition(alloc.horizon(), alloc.max_level());
    return f;
}

/// Same check against a precomputed source map.
inline WindowCoverage check_window_coverage(const Allocation& alloc, const std::vector<std::uint64_t>& f, std::uint64_t k,
                                            unsigned m) {
    if (k + (std::uint64_t{1} << m) > f.size()) throw std::out_of_range("check_window_coverage: window past source map");
    return detail::window_coverage(alloc, k, m, [&](std::uint64_t p) { return f[p]; });
}

}  // namespace ecs::spreader

#endif  // ECS_SPREADER_HPP
