#ifndef ECS_IO_HPP
#define ECS_IO_HPP

#include "ecs/adversary.hpp"
#include "ecs/bitstring.hpp"
#include "ecs/distribution.hpp"
#include "ecs/forbidden.hpp"
#include "ecs/rational.hpp"
#include "ecs/spreader.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ecs::io {

using json = nlohmann::json;

// ============================================================================
// Bit files
// ============================================================================

enum class BitFormat { ascii, packed };

inline constexpr std::array<char, 4> kPackedMagic{'E', 'C', 'S', '1'};

inline std::string encode_bits(const BitString& x, BitFormat format) {
    if (format == BitFormat::ascii) return x.to_string() + "\n";
    std::string out(kPackedMagic.begin(), kPackedMagic.end());
    const std::uint64_t n = x.size();
    for (unsigned b = 0; b < 8; ++b) out.push_back(static_cast<char>((n >> (8 * b)) & 0xFFU));
    for (auto byte : x.to_bytes()) out.push_back(static_cast<char>(byte));
    return out;
}

/// Packed if the data starts with the magic, otherwise '0'/'1' text with optional whitespace.
inline BitString decode_bits(const std::string& data) {
    if (data.size() >= 4 && std::equal(kPackedMagic.begin(), kPackedMagic.end(), data.begin())) {
        if (data.size() < 12) throw std::invalid_argument("bit file: truncated header");
        std::uint64_t n = 0;
        for (unsigned b = 0; b < 8; ++b) n |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[4 + b])) << (8 * b);
        const std::size_t payload = data.size() - 12;
        if (payload != (n + 7) / 8) {
            throw std::invalid_argument("bit file: payload has " + std::to_string(payload) + " bytes, expected " +
                                        std::to_string((n + 7) / 8));
        }
        std::vector<std::uint8_t> bytes(data.begin() + 12, data.end());
        return BitString::from_bytes(bytes, n);
    }
    BitString out;
    for (char c : data) {
        if (c == '0' || c == '1') {
            out.push_back(c == '1');
        } else if (c != '\n' && c != '\r' && c != ' ' && c != '\t') {
            throw std::invalid_argument("bit file: unexpected character");
        }
    }
    return out;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << data;
}

inline BitString read_bits(const std::string& path) { return decode_bits(read_file(path)); }
inline void write_bits(const std::string& path, const BitString& x, BitFormat f) { write_file(path, encode_bits(x, f)); }

inline json read_json(const std::string& path) { return json::parse(read_file(path)); }

// ============================================================================
// Distributions
// ============================================================================

inline json to_json(const FiniteDistribution& P) {
    json masses = json::object();
    for (const auto& [x, m] : P.masses()) masses[x.to_string()] = to_string(m);
    return {{"length", P.length()}, {"masses", masses}, {"deficit", to_string(P.deficit())}};
}

inline FiniteDistribution distribution_from_json(const json& j) {
    const auto length = j.at("length").get<std::size_t>();
    FiniteDistribution::Masses masses;
    for (const auto& [key, value] : j.at("masses").items()) {
        masses.emplace(BitString::from_string(key), parse_rational(value.get<std::string>()));
    }
    if (j.contains("deficit")) {
        return FiniteDistribution(length, std::move(masses), parse_rational(j.at("deficit").get<std::string>()));
    }
    return FiniteDistribution::with_implied_deficit(length, std::move(masses));
}

// ============================================================================
// Allocations
// ============================================================================

inline json to_json(const spreader::Allocation& a) {
    json levels = json::array();
    for (unsigned m = a.m0(); m <= a.max_level(); ++m) {
        levels.push_back({{"level", m}, {"count", a.count(m)}, {"cumulative", a.cumulative(m)}, {"first_terms", a.first_terms(m)}});
    }
    json out = {{"m0", a.m0()}, {"max_level", a.max_level()}, {"test_mode", a.test_mode()}, {"levels", levels}};
    if (!a.weights_name().empty()) out["weights"] = a.weights_name();
    if (a.weights_ratio()) out["ratio"] = to_string(*a.weights_ratio());
    return out;
}

inline spreader::Allocation allocation_from_json(const json& j) {
    const auto m0 = j.at("m0").get<unsigned>();
    std::vector<std::vector<std::uint64_t>> levels;
    unsigned expected = m0;
    for (const auto& lv : j.at("levels")) {
        if (lv.at("level").get<unsigned>() != expected) throw std::invalid_argument("allocation JSON: levels out of order");
        levels.push_back(lv.at("first_terms").get<std::vector<std::uint64_t>>());
        if (lv.contains("count") && lv.at("count").get<std::uint64_t>() != levels.back().size()) {
            throw std::invalid_argument("allocation JSON: count disagrees with first terms at level " + std::to_string(expected));
        }
        ++expected;
    }
    return spreader::Allocation::from_first_terms(m0, levels);
}

// ============================================================================
// Level families
// ============================================================================

inline json to_json(const forbidden::SimpleChain& c) {
    json ts = json::array();
    for (const auto& t : c.thresholds) ts.push_back(t.str());
    return {{"lengths", c.lengths}, {"thresholds", ts}};
}

inline forbidden::SimpleChain chain_from_json(const json& j) {
    std::vector<BigInt> ts;
    for (const auto& t : j.at("thresholds")) ts.emplace_back(t.get<std::string>());
    return {j.at("lengths").get<std::vector<std::uint64_t>>(), std::move(ts)};
}

inline json strings_to_hex(const std::vector<BitString>& strings) {
    json out = json::array();
    for (const auto& s : strings) out.push_back(s.to_hex());
    return out;
}

inline std::vector<BitString> strings_from_hex(const json& j, std::size_t length) {
    std::vector<BitString> out;
    for (const auto& h : j) out.push_back(BitString::from_hex(h.get<std::string>(), length));
    return out;
}

inline json to_json(const forbidden::LevelFamily& fam) {
    json levels = json::array();
    for (const auto& [len, lv] : fam.levels()) {
        json entry = {{"length", len},
                      {"cardinality", fam.cardinality(len).str()},
                      {"bound", forbidden::size_bound(fam.alpha(), len).str()},
                      {"fits_bound", fam.level_fits_bound(len)}};
        if (const auto* f = std::get_if<forbidden::FixedLevel>(&lv)) {
            entry["kind"] = "explicit";
            entry["strings"] = strings_to_hex(f->strings);
        } else if (const auto* s = std::get_if<forbidden::SampledLevel>(&lv)) {
            entry["kind"] = "sampled";
            entry["pool"] = to_json(s->pool);
            entry["sample_size"] = s->sample_size.str();
            entry["strings"] = strings_to_hex(s->strings);
        } else {
            const auto& imp = std::get<forbidden::ImplicitLevel>(lv);
            entry["kind"] = "simple";
            entry["predicate"] = to_json(imp.predicate);
        }
        levels.push_back(std::move(entry));
    }
    return {{"alpha", to_string(fam.alpha())}, {"levels", levels}};
}

/// Rebuilds a family; implicit cardinalities are recomputed, never trusted.
inline forbidden::LevelFamily family_from_json(const json& j) {
    forbidden::LevelFamily fam(parse_rational(j.at("alpha").get<std::string>()));
    for (const auto& entry : j.at("levels")) {
        const auto len = entry.at("length").get<std::uint64_t>();
        const auto kind = entry.value("kind", std::string("explicit"));
        if (kind == "explicit") {
            fam.add_level(len, forbidden::FixedLevel{strings_from_hex(entry.at("strings"), len)});
        } else if (kind == "sampled") {
            fam.add_level(len, forbidden::SampledLevel{chain_from_json(entry.at("pool")),
                                                       BigInt(entry.at("sample_size").get<std::string>()),
                                                       strings_from_hex(entry.at("strings"), len)});
        } else if (kind == "simple") {
            auto chain = chain_from_json(entry.at("predicate"));
            BigInt card = chain.size();
            fam.add_level(len, forbidden::ImplicitLevel{std::move(chain), std::move(card)});
        } else {
            throw std::invalid_argument("family JSON: unknown level kind '" + kind + "'");
        }
    }
    return fam;
}

// ============================================================================
// Positional families
// ============================================================================

inline json to_json(const adversary::PositionalFamily& fam) {
    json strings = json::array();
    for (const auto& s : fam.strings) strings.push_back(s.to_string());
    json out = {{"n", fam.n},
                {"N", fam.positions()},
                {"strings", strings},
                {"certificate", fam.certificate.str()},
                {"enumerated_part", fam.enumerated_part.str()},
                {"epsilon", fam.epsilon.str()}};
    if (fam.g) out["g"] = *fam.g;
    return out;
}

inline adversary::PositionalFamily positional_family_from_json(const json& j) {
    adversary::PositionalFamily fam;
    fam.n = j.at("n").get<std::size_t>();
    for (const auto& s : j.at("strings")) {
        fam.strings.push_back(BitString::from_string(s.get<std::string>()));
        if (fam.strings.back().size() != fam.n) throw std::invalid_argument("positional family JSON: string length != n");
    }
    fam.certificate = ExactProb::parse(j.at("certificate").get<std::string>());
    if (j.contains("enumerated_part")) fam.enumerated_part = ExactProb::parse(j.at("enumerated_part").get<std::string>());
    if (j.contains("epsilon")) fam.epsilon = ExactProb::parse(j.at("epsilon").get<std::string>());
    if (j.contains("g")) fam.g = j.at("g").get<std::string>();
    return fam;
}

}  // namespace ecs::io

#endif  // ECS_IO_HPP
