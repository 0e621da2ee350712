#ifndef ECS_PROXY_HPP
#define ECS_PROXY_HPP

#include "ecs/bitstring.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <vector>

// Compression-based upper-bound heuristic for string complexity. Reports built
// from it are sanity profiles only; it never backs a certificate.
namespace ecs::proxy {

/// Bits in the length header that starts every code.
inline constexpr std::size_t kHeaderBits = 64;

namespace detail {

inline unsigned index_width(std::uint64_t phrase_number) {
    // phrase i (1-based) refers to one of the i entries 0..i-1
    return phrase_number <= 1 ? 0 : static_cast<unsigned>(std::bit_width(phrase_number - 1));
}

inline void put(BitString& out, std::uint64_t value, unsigned width) {
    for (unsigned b = width; b-- > 0;) out.push_back((value >> b) & 1U);
}

inline std::uint64_t get(const BitString& in, std::size_t& pos, unsigned width) {
    if (pos + width > in.size()) throw std::invalid_argument("proxy::decode: truncated code");
    std::uint64_t v = 0;
    for (unsigned b = 0; b < width; ++b) v = (v << 1) | static_cast<std::uint64_t>(in[pos++]);
    return v;
}

}  // namespace detail

/// Incremental dictionary parse: each phrase is a known phrase plus one bit,
/// coded as (index of the known phrase, the bit). A trailing phrase that is
/// already in the dictionary is coded with a dummy bit; the header length
/// tells the decoder to drop it.
inline BitString encode(const BitString& x) {
    BitString out;
    detail::put(out, x.size(), kHeaderBits);
    // child[(node << 1) | bit] -> node id
    std::unordered_map<std::uint64_t, std::uint64_t> child;
    std::uint64_t phrases = 0;  // dictionary holds phrases + 1 entries (root is 0)
    std::uint64_t node = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::uint64_t key = (node << 1) | static_cast<std::uint64_t>(x[i]);
        auto it = child.find(key);
        if (it != child.end()) {
            node = it->second;
            continue;
        }
        ++phrases;
        detail::put(out, node, detail::index_width(phrases));
        out.push_back(x[i]);
        child.emplace(key, phrases);
        node = 0;
    }
    if (node != 0) {
        ++phrases;
        detail::put(out, node, detail::index_width(phrases));
        out.push_back(false);
    }
    return out;
}

inline BitString decode(const BitString& code) {
    std::size_t pos = 0;
    const std::uint64_t length = detail::get(code, pos, kHeaderBits);
    // each entry: (parent, bit, depth)
    struct Entry {
        std::uint64_t parent;
        bool bit;
        std::uint64_t depth;
    };
    std::vector<Entry> dict{{0, false, 0}};
    BitString out;
    std::vector<bool> scratch;
    while (out.size() < length) {
        const auto phrase_number = static_cast<std::uint64_t>(dict.size());
        const std::uint64_t ref = detail::get(code, pos, detail::index_width(phrase_number));
        if (ref >= dict.size()) throw std::invalid_argument("proxy::decode: dangling phrase reference");
        const bool bit = detail::get(code, pos, 1) != 0;
        scratch.clear();
        for (std::uint64_t e = ref; e != 0; e = dict[e].parent) scratch.push_back(dict[e].bit);
        for (auto it = scratch.rbegin(); it != scratch.rend() && out.size() < length; ++it) out.push_back(*it);
        if (out.size() < length) out.push_back(bit);
        dict.push_back({ref, bit, dict[ref].depth + 1});
    }
    if (pos != code.size()) throw std::invalid_argument("proxy::decode: trailing bits after code");
    return out;
}

inline std::size_t compress_size(const BitString& x) { return encode(x).size(); }

struct ComplexityProfile {
    std::size_t window_length = 0;
    std::size_t stride = 1;
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> values;  // proxy size in bits per window
    std::size_t min = 0;
    std::size_t max = 0;
    double mean = 0.0;
    std::size_t argmin = 0;  // offset of the first minimal window
};

inline ComplexityProfile window_profile(const BitString& x, std::size_t n, std::size_t stride = 1) {
    if (n > x.size()) throw std::invalid_argument("window_profile: window longer than string");
    if (stride == 0) throw std::invalid_argument("window_profile: stride must be positive");
    ComplexityProfile p;
    p.window_length = n;
    p.stride = stride;
    for (std::size_t k = 0; k + n <= x.size(); k += stride) {
        p.offsets.push_back(k);
        p.values.push_back(compress_size(x.window(k, n)));
    }
    const auto mn = std::min_element(p.values.begin(), p.values.end());
    p.min = *mn;
    p.argmin = p.offsets[static_cast<std::size_t>(mn - p.values.begin())];
    p.max = *std::max_element(p.values.begin(), p.values.end());
    p.mean = static_cast<double>(std::accumulate(p.values.begin(), p.values.end(), std::uint64_t{0})) /
             static_cast<double>(p.values.size());
    return p;
}

}  // namespace ecs::proxy

#endif  // ECS_PROXY_HPP
