#ifndef ECS_BITSTRING_HPP
#define ECS_BITSTRING_HPP

#include <algorithm>
#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ecs {

/// Finite binary string, packed 64 bits per word. Bit i lives in word i/64 at
/// bit position i%64, which serializes to LSB-first bytes.
class BitString {
public:
    BitString() = default;

    explicit BitString(std::size_t length, bool fill = false)
        : length_(length), words_((length + 63) / 64, fill ? ~std::uint64_t{0} : 0) {
        trim();
    }

    /// Parses '0'/'1' characters; anything else is rejected.
    static BitString from_string(std::string_view text) {
        BitString out(text.size());
        for (std::size_t i = 0; i < text.size(); ++i) {
            if (text[i] == '1') {
                out.set(i, true);
            } else if (text[i] != '0') {
                throw std::invalid_argument("BitString: invalid character in '" + std::string(text) + "'");
            }
        }
        return out;
    }

    /// Builds the n-bit string whose binary numeral (position 0 most significant) is value.
    static BitString from_value(std::uint64_t value, std::size_t n) {
        if (n > 64) throw std::invalid_argument("BitString::from_value: length exceeds 64");
        BitString out(n);
        for (std::size_t i = 0; i < n; ++i) {
            out.set(i, (value >> (n - 1 - i)) & 1U);
        }
        return out;
    }

    std::size_t size() const noexcept { return length_; }
    bool empty() const noexcept { return length_ == 0; }

    bool operator[](std::size_t i) const noexcept { return (words_[i / 64] >> (i % 64)) & 1U; }

    bool at(std::size_t i) const {
        if (i >= length_) throw std::out_of_range("BitString::at: index " + std::to_string(i) + " out of range");
        return (*this)[i];
    }

    void set(std::size_t i, bool bit) {
        if (i >= length_) throw std::out_of_range("BitString::set: index " + std::to_string(i) + " out of range");
        const std::uint64_t mask = std::uint64_t{1} << (i % 64);
        if (bit) {
            words_[i / 64] |= mask;
        } else {
            words_[i / 64] &= ~mask;
        }
    }

    void flip(std::size_t i) { set(i, !at(i)); }

    void push_back(bool bit) {
        if (length_ % 64 == 0) words_.push_back(0);
        ++length_;
        set(length_ - 1, bit);
    }

    void append(const BitString& other) {
        for (std::size_t i = 0; i < other.size(); ++i) push_back(other[i]);
    }

    /// x([k, k+n)).
    BitString window(std::size_t k, std::size_t n) const {
        if (k > length_ || n > length_ - k) {
            throw std::out_of_range("BitString::window: [" + std::to_string(k) + ", " + std::to_string(k + n) +
                                    ") exceeds length " + std::to_string(length_));
        }
        BitString out(n);
        if (k % 64 == 0) {
            std::copy_n(words_.begin() + static_cast<std::ptrdiff_t>(k / 64), out.words_.size(), out.words_.begin());
        } else {
            const std::size_t shift = k % 64;
            for (std::size_t w = 0; w < out.words_.size(); ++w) {
                const std::size_t src = k / 64 + w;
                std::uint64_t lo = words_[src] >> shift;
                std::uint64_t hi = src + 1 < words_.size() ? words_[src + 1] << (64 - shift) : 0;
                out.words_[w] = lo | hi;
            }
        }
        out.trim();
        return out;
    }

    /// Numeral of x([k, k+n)) with position k most significant; n <= 64.
    std::uint64_t value(std::size_t k, std::size_t n) const {
        if (n > 64) throw std::invalid_argument("BitString::value: length exceeds 64");
        if (k > length_ || n > length_ - k) throw std::out_of_range("BitString::value: window out of range");
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < n; ++i) v = (v << 1) | static_cast<std::uint64_t>((*this)[k + i]);
        return v;
    }

    std::uint64_t value() const { return value(0, length_); }

    std::size_t count_ones() const noexcept {
        std::size_t c = 0;
        for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }

    std::string to_string() const {
        std::string s(length_, '0');
        for (std::size_t i = 0; i < length_; ++i) {
            if ((*this)[i]) s[i] = '1';
        }
        return s;
    }

    /// Hex digits of the numeral (position 0 most significant), left-padded to ceil(n/4) digits.
    std::string to_hex() const {
        static constexpr char digits[] = "0123456789abcdef";
        const std::size_t pad = (4 - length_ % 4) % 4;
        std::string out;
        out.reserve((length_ + 3) / 4);
        unsigned nibble = 0;
        for (std::size_t i = 0; i < pad + length_; ++i) {
            const bool bit = i >= pad && (*this)[i - pad];
            nibble = (nibble << 1) | static_cast<unsigned>(bit);
            if (i % 4 == 3) {
                out.push_back(digits[nibble]);
                nibble = 0;
            }
        }
        return out;
    }

    static BitString from_hex(std::string_view hex, std::size_t n) {
        if (hex.size() != (n + 3) / 4) throw std::invalid_argument("BitString::from_hex: digit count does not match length");
        const std::size_t pad = (4 - n % 4) % 4;
        BitString out(n);
        for (std::size_t d = 0; d < hex.size(); ++d) {
            const char c = hex[d];
            unsigned v = 0;
            if (c >= '0' && c <= '9') {
                v = static_cast<unsigned>(c - '0');
            } else if (c >= 'a' && c <= 'f') {
                v = static_cast<unsigned>(c - 'a' + 10);
            } else if (c >= 'A' && c <= 'F') {
                v = static_cast<unsigned>(c - 'A' + 10);
            } else {
                throw std::invalid_argument("BitString::from_hex: invalid digit");
            }
            for (unsigned b = 0; b < 4; ++b) {
                const std::size_t pos = d * 4 + b;
                const bool bit = (v >> (3 - b)) & 1U;
                if (pos < pad) {
                    if (bit) throw std::invalid_argument("BitString::from_hex: nonzero padding");
                } else {
                    out.set(pos - pad, bit);
                }
            }
        }
        return out;
    }

    /// LSB-first packed bytes, ceil(n/8) of them.
    std::vector<std::uint8_t> to_bytes() const {
        std::vector<std::uint8_t> out((length_ + 7) / 8, 0);
        for (std::size_t b = 0; b < out.size(); ++b) {
            out[b] = static_cast<std::uint8_t>(words_[b / 8] >> (8 * (b % 8)));
        }
        return out;
    }

    static BitString from_bytes(const std::vector<std::uint8_t>& bytes, std::size_t n) {
        if (bytes.size() < (n + 7) / 8) throw std::invalid_argument("BitString::from_bytes: payload too short");
        BitString out(n);
        for (std::size_t b = 0; b < (n + 7) / 8; ++b) {
            out.words_[b / 8] |= static_cast<std::uint64_t>(bytes[b]) << (8 * (b % 8));
        }
        out.trim();
        return out;
    }

    std::span<const std::uint64_t> words() const noexcept { return words_; }

    friend bool operator==(const BitString& a, const BitString& b) noexcept {
        return a.length_ == b.length_ && a.words_ == b.words_;
    }

    /// Shorter strings first; equal lengths compare as binary numerals.
    friend std::strong_ordering operator<=>(const BitString& a, const BitString& b) noexcept {
        if (auto c = a.length_ <=> b.length_; c != 0) return c;
        for (std::size_t i = 0; i < a.length_; ++i) {
            if (a[i] != b[i]) return a[i] ? std::strong_ordering::greater : std::strong_ordering::less;
        }
        return std::strong_ordering::equal;
    }

private:
    void trim() noexcept {
        if (length_ % 64 != 0 && !words_.empty()) {
            words_.back() &= (std::uint64_t{1} << (length_ % 64)) - 1;
        }
    }

    std::size_t length_ = 0;
    std::vector<std::uint64_t> words_;
};

struct BitStringHash {
    std::size_t operator()(const BitString& s) const noexcept {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ s.size();
        for (auto w : s.words()) {
            h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return static_cast<std::size_t>(h);
    }
};

}  // namespace ecs

template <>
struct std::hash<ecs::BitString> : ecs::BitStringHash {};

#endif  // ECS_BITSTRING_HPP
