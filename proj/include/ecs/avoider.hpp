#ifndef ECS_AVOIDER_HPP
#define ECS_AVOIDER_HPP

#include "ecs/bitstring.hpp"
#include "ecs/forbidden.hpp"
#include "ecs/random.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace ecs::avoider {

using Violation = std::pair<std::uint64_t, std::uint64_t>;  // (position, length)

namespace detail {

/// Explicit levels of a family as numeral sets; levels are limited to 64 bits.
class Index {
public:
    explicit Index(const forbidden::LevelFamily& fam) {
        for (const auto& [len, lv] : fam.levels()) {
            const std::vector<BitString>* strings = nullptr;
            if (const auto* f = std::get_if<forbidden::FixedLevel>(&lv)) strings = &f->strings;
            if (const auto* s = std::get_if<forbidden::SampledLevel>(&lv)) strings = &s->strings;
            if (strings == nullptr) {
                throw std::invalid_argument("avoider: level " + std::to_string(len) + " is predicate-backed; explicit sets only");
            }
            if (len > 64) throw std::invalid_argument("avoider: level " + std::to_string(len) + " exceeds 64 bits");
            std::unordered_set<std::uint64_t> set;
            for (const auto& w : *strings) set.insert(w.value());
            if (!set.empty()) levels_.emplace_back(len, std::move(set));
        }
    }

    bool violates(const BitString& x, std::uint64_t k, std::size_t level_idx) const {
        const auto& [len, set] = levels_[level_idx];
        return set.count(x.value(k, len)) != 0;
    }

    std::size_t size() const noexcept { return levels_.size(); }
    std::uint64_t length(std::size_t level_idx) const { return levels_[level_idx].first; }

private:
    std::vector<std::pair<std::uint64_t, std::unordered_set<std::uint64_t>>> levels_;
};

}  // namespace detail

/// Every (k, n) with x([k, k+n)) in A_n, ordered by (k, n).
inline std::vector<Violation> scan_violations(const BitString& x, const forbidden::LevelFamily& family) {
    const detail::Index index(family);
    std::vector<Violation> out;
    for (std::size_t li = 0; li < index.size(); ++li) {
        const std::uint64_t len = index.length(li);
        if (len > x.size()) continue;
        for (std::uint64_t k = 0; k + len <= x.size(); ++k) {
            if (index.violates(x, k, li)) out.emplace_back(k, len);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

struct AvoidanceInstance {
    forbidden::LevelFamily family;
    Rational alpha{1};
    std::uint64_t length = 0;
    std::uint64_t max_resamples = 1'000'000;
    std::uint64_t seed = 0;

    void validate() const {
        if (max_resamples == 0) throw std::invalid_argument("avoidance: resample budget must be positive");
        if (alpha <= 0 || alpha > 1) throw std::invalid_argument("avoidance: alpha must lie in (0, 1]");
        for (const auto& [len, lv] : family.levels()) {
            if (len > length) {
                throw std::invalid_argument("avoidance: level " + std::to_string(len) + " exceeds target length " +
                                            std::to_string(length));
            }
            if (!forbidden::fits_size_bound(family.cardinality(len), alpha, len)) {
                throw std::invalid_argument("avoidance: level " + std::to_string(len) + " has " +
                                            family.cardinality(len).str() + " strings, above floor(2^(alpha n)) = " +
                                            forbidden::size_bound(alpha, len).str());
            }
        }
    }
};

struct AvoidResult {
    bool success = false;
    BitString string;
    std::uint64_t resamples = 0;
    std::uint64_t residual_violations = 0;
};

/// Occurrence resampling: start from uniform bits and, while some forbidden
/// occurrence remains, redraw the bits of the leftmost one (shortest first on ties).
inline AvoidResult build_avoiding_string(const AvoidanceInstance& inst) {
    inst.validate();
    const detail::Index index(inst.family);
    const RandomSource root(inst.seed);
    RandomSource initial = root.substream(0);
    RandomSource redraw = root.substream(1);

    AvoidResult result;
    result.string = initial.bits(inst.length);
    BitString& x = result.string;

    std::set<Violation> open;
    auto recheck = [&](std::uint64_t lo, std::uint64_t hi) {  // windows meeting [lo, hi)
        for (std::size_t li = 0; li < index.size(); ++li) {
            const std::uint64_t len = index.length(li);
            if (len > x.size()) continue;
            const std::uint64_t first = lo + 1 >= len ? lo + 1 - len : 0;
            const std::uint64_t last = std::min<std::uint64_t>(hi - 1, x.size() - len);
            for (std::uint64_t k = first; k <= last; ++k) {
                if (index.violates(x, k, li)) {
                    open.emplace(k, len);
                } else {
                    open.erase({k, len});
                }
            }
        }
    };
    if (inst.length > 0) recheck(0, inst.length);

    while (!open.empty()) {
        if (result.resamples == inst.max_resamples) {
            result.residual_violations = open.size();
            return result;
        }
        const auto [k, len] = *open.begin();
        for (std::uint64_t i = k; i < k + len; ++i) x.set(i, redraw.next_bit());
        ++result.resamples;
        recheck(k, k + len);
    }
    result.success = true;
    return result;
}

/// First string of length L (in numeric order) with no forbidden substring, or
/// nullopt when none exists. Exhaustive with prefix pruning; L <= 24.
inline std::optional<BitString> brute_force_avoider(const forbidden::LevelFamily& family, std::size_t length) {
    if (length > 24) throw std::invalid_argument("brute_force_avoider: length above 24");
    const detail::Index index(family);
    BitString x(length);
    // windows ending at position i
    auto clean_at = [&](std::size_t i) {
        for (std::size_t li = 0; li < index.size(); ++li) {
            const std::uint64_t len = index.length(li);
            if (len <= i + 1 && index.violates(x, i + 1 - len, li)) return false;
        }
        return true;
    };
    std::vector<int> bit(length, -1);
    std::size_t pos = 0;
    if (length == 0) return x;
    for (;;) {
        ++bit[pos];
        if (bit[pos] > 1) {
            bit[pos] = -1;
            if (pos == 0) return std::nullopt;
            --pos;
            continue;
        }
        x.set(pos, bit[pos] == 1);
        if (!clean_at(pos)) continue;
        if (pos + 1 == length) return x;
        ++pos;
    }
}

}  // namespace ecs::avoider

#endif  // ECS_AVOIDER_HPP
