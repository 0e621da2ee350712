// ecs: command-line front end. Every subcommand is deterministic given its
// flags; reports carry enough data for `ecs verify` to re-derive each certificate.
#include "ecs/ecs.hpp"
#include "ecs/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

using json = nlohmann::json;
using namespace ecs;

enum ExitCode : int { kOk = 0, kVerifyFailed = 1, kBadParams = 2, kBudgetExhausted = 3 };

struct BadParams : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct VerifyFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Clock = std::chrono::steady_clock;

struct Report {
    std::string command;
    std::uint64_t seed = 0;
    json parameters = json::object();
    json results = json::object();
    json certificates = json::object();
    Clock::time_point start = Clock::now();

    json to_json() const {
        return {{"command", command},
                {"seed", seed},
                {"parameters", parameters},
                {"results", results},
                {"certificates", certificates},
                {"wall_time_seconds", std::chrono::duration<double>(Clock::now() - start).count()}};
    }
};

void emit(const Report& r, const std::string& out) {
    const std::string text = r.to_json().dump(2) + "\n";
    if (out.empty() || out == "-") {
        std::cout << text;
    } else {
        io::write_file(out, text);
    }
}

Rational rational_flag(const std::string& name, const std::string& text) {
    try {
        return parse_rational(text);
    } catch (const std::exception& e) {
        throw BadParams("--" + name + ": " + e.what());
    }
}

ExactProb prob_flag(const std::string& name, const std::string& text) {
    const Rational v = rational_flag(name, text);
    if (v <= 0 || v > 1) throw BadParams("--" + name + " must lie in (0, 1], got " + text);
    return ExactProb(v);
}

io::BitFormat bit_format(const std::string& f) {
    if (f == "ascii") return io::BitFormat::ascii;
    if (f == "packed") return io::BitFormat::packed;
    throw BadParams("--format " + f + " is not a bit-file format (use ascii or packed)");
}

json read_json_input(const std::string& path) {
    try {
        return io::read_json(path);
    } catch (const json::exception& e) {
        throw BadParams("'" + path + "' is not valid JSON: " + e.what());
    }
}

BitString read_bits_input(const std::string& path) {
    try {
        return io::read_bits(path);
    } catch (const std::invalid_argument& e) {
        throw BadParams("'" + path + "': " + e.what());
    }
}

std::vector<std::uint64_t> split_u64(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoull(part, &used));
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw BadParams("expected a comma-separated list of integers, got '" + text + "'");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// spread
// ---------------------------------------------------------------------------

struct SpreadOpts {
    std::string weights = "inverse-triangular";
    std::string ratio;
    std::optional<unsigned> m0;
    std::uint64_t length = 0;
    std::uint64_t seed = 0;
    std::string out;
    std::string alloc_out;
    std::string format = "packed";
    std::string report;
};

int cmd_spread(const SpreadOpts& o) {
    Report r{"spread", o.seed};
    std::optional<Rational> ratio;
    if (!o.ratio.empty()) ratio = rational_flag("ratio", o.ratio);
    const auto format = bit_format(o.format);
    const auto w = spreader::WeightSeries::from_preset(o.weights, ratio);
    const unsigned m0 = o.m0 ? *o.m0 : static_cast<unsigned>(spreader::choose_m0(w));
    auto alloc = spreader::Allocation::plan(w, m0, m0);  // throws on an uncertified m0
    RandomSource rs(o.seed);
    const BitString omega = spreader::spread(alloc, rs, o.length);
    io::write_bits(o.out, omega, format);
    const std::string alloc_path = o.alloc_out.empty() ? o.out + ".alloc.json" : o.alloc_out;
    const json alloc_json = io::to_json(alloc);
    io::write_file(alloc_path, alloc_json.dump(2) + "\n");

    r.parameters = {{"weights", o.weights}, {"m0", m0}, {"m0_overridden", o.m0.has_value()}, {"length", o.length},
                    {"format", o.format},   {"out", o.out}, {"alloc_out", alloc_path}};
    if (ratio) r.parameters["ratio"] = to_string(*ratio);
    r.results = {{"bits_written", omega.size()},
                 {"source_bits", o.length == 0 ? 0 : spreader::required_source_bits(alloc, o.length)},
                 {"max_level", alloc.max_level()},
                 {"allocation", alloc_json}};
    r.certificates = {{"m0_certificate", to_string(spreader::m0_certificate(w, m0))},
                      {"budget_used", to_string(alloc.budget_used())}};
    emit(r, o.report);
    return kOk;
}

// ---------------------------------------------------------------------------
// check-windows
// ---------------------------------------------------------------------------

struct CheckOpts {
    std::string bits;
    std::string alloc;
    unsigned m_max = 12;
    unsigned exhaustive_max = 6;
    std::uint64_t samples = 1000;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_check_windows(const CheckOpts& o) {
    Report r{"check-windows", o.seed};
    const BitString omega = read_bits_input(o.bits);
    spreader::Allocation alloc = [&] {
        try {
            return io::allocation_from_json(read_json_input(o.alloc));
        } catch (const json::exception& e) {
            throw BadParams(std::string("allocation JSON: ") + e.what());
        }
    }();
    const std::uint64_t L = omega.size();
    if (alloc.horizon() < L) {
        throw BadParams("allocation covers positions below " + std::to_string(alloc.horizon()) + " only, bit file has " +
                        std::to_string(L));
    }
    r.parameters = {{"bits", o.bits}, {"alloc", o.alloc}, {"m_max", o.m_max}, {"exhaustive_max", o.exhaustive_max},
                    {"samples", o.samples}};

    const auto f = spreader::source_map(alloc, L);
    json violations = json::array();
    std::uint64_t violation_count = 0;
    auto record = [&](json v) {
        ++violation_count;
        if (violations.size() < 100) violations.push_back(std::move(v));
    };

    // Global scan: consecutive terms of every progression must carry the same bit.
    for (unsigned m = alloc.m0(); m <= alloc.max_level(); ++m) {
        const std::uint64_t diff = std::uint64_t{1} << m;
        for (auto first : alloc.first_terms(m)) {
            for (std::uint64_t p = first + diff; p < L; p += diff) {
                if (omega[p] != omega[p - diff]) {
                    record({{"kind", "inconsistent-read"}, {"k", p - diff}, {"m", m + 1}, {"source_bit", f[p]},
                            {"positions", {p - diff, p}}});
                }
            }
        }
    }

    const unsigned lo = alloc.m0();
    const unsigned hi = std::min(o.m_max, alloc.max_level());
    std::uint64_t windows_checked = 0;
    if (o.m_max < alloc.m0()) {
        std::cerr << "warning: --m-max " << o.m_max << " is below m0 = " << alloc.m0() << "; nothing to check\n";
    }
    RandomSource rs(o.seed);
    for (unsigned m = lo; m <= hi && o.m_max >= lo; ++m) {
        const std::uint64_t width = std::uint64_t{1} << m;
        if (width > L) break;
        const std::uint64_t starts = L - width + 1;
        std::vector<std::uint64_t> ks;
        if (m <= o.exhaustive_max) {
            for (std::uint64_t k = 0; k < starts; ++k) ks.push_back(k);
        } else {
            RandomSource level_rs = rs.substream(m);
            for (std::uint64_t s = 0; s < o.samples; ++s) ks.push_back(level_rs.uniform_below(starts));
        }
        std::optional<BitString> prefix;
        for (auto k : ks) {
            ++windows_checked;
            const auto cov = spreader::check_window_coverage(alloc, f, k, m);
            if (!cov.ok()) {
                record({{"kind", "coverage"}, {"k", k}, {"m", m}, {"missing", cov.missing.size()},
                        {"repeated_top", cov.repeated_top.size()}});
                continue;
            }
            try {
                auto got = spreader::recover_prefix(alloc, omega.window(k, width), k % width, m);
                if (!prefix) {
                    prefix = std::move(got);
                } else if (got != *prefix) {
                    record({{"kind", "prefix-mismatch"}, {"k", k}, {"m", m}});
                }
            } catch (const spreader::InconsistentWindow& e) {
                record({{"kind", "inconsistent-read"}, {"k", k}, {"m", m}, {"source_bit", e.source_bit},
                        {"positions", {k + e.offset_a, k + e.offset_b}}});
            }
        }
    }
    r.results = {{"length", L},
                 {"levels", {lo, hi}},
                 {"windows_checked", windows_checked},
                 {"violation_count", violation_count},
                 {"violations", violations}};
    emit(r, o.out);
    return violation_count == 0 ? kOk : kVerifyFailed;
}

// ---------------------------------------------------------------------------
// family
// ---------------------------------------------------------------------------

struct FamilyOpts {
    std::string alpha = "3/5";
    std::string epsilon = "1/10";
    std::uint64_t n_min = 1;
    std::string lengths;
    std::string thresholds;
    std::uint64_t seed = 0;
    std::string out;
};

json level_certificates(const forbidden::LevelFamily& fam) {
    json out = json::array();
    for (const auto& [len, lv] : fam.levels()) {
        out.push_back({{"length", len},
                       {"cardinality", fam.cardinality(len).str()},
                       {"bound", forbidden::size_bound(fam.alpha(), len).str()},
                       {"fits", fam.level_fits_bound(len)}});
    }
    return out;
}

int cmd_family(const FamilyOpts& o) {
    Report r{"family", o.seed};
    const Rational alpha = rational_flag("alpha", o.alpha);
    const ExactProb eps = prob_flag("epsilon", o.epsilon);
    RandomSource rs(o.seed);
    r.parameters = {{"alpha", to_string(alpha)}, {"epsilon", eps.str()}};
    int code = kOk;
    if (o.lengths.empty()) {
        r.parameters["mode"] = "two-level";
        r.parameters["n_min"] = o.n_min;
        const auto res = forbidden::two_level_family(alpha, eps, o.n_min, rs);
        const auto& c = res.certificate;
        r.results = {{"n", c.n}, {"N", c.N}, {"threshold", c.threshold.str()}, {"sample_size", c.sample_size.str()},
                     {"family", io::to_json(res.family)}};
        r.certificates = {{"miss_bound", to_string(c.miss_bound)},
                          {"worst_miss", c.worst_miss.str()},
                          {"levels", level_certificates(res.family)}};
        if (!res.family.all_levels_fit_bound()) code = kVerifyFailed;
    } else {
        r.parameters["mode"] = "layered";
        std::vector<BigInt> ts;
        for (auto t : split_u64(o.thresholds)) ts.emplace_back(t);
        const forbidden::LayeredParams params{alpha, eps, split_u64(o.lengths), ts};
        r.parameters["lengths"] = params.lengths;
        r.parameters["thresholds"] = split_u64(o.thresholds);
        const auto res = forbidden::multi_level_family(params, rs);
        const auto& c = res.certificate;
        json pools = json::array();
        json worst = json::array();
        for (std::size_t j = 0; j < c.pool_sizes.size(); ++j) {
            pools.push_back(c.pool_sizes[j].str());
            worst.push_back(c.worst_miss[j].str());
        }
        r.results = {{"family", io::to_json(res.family)}};
        r.certificates = {{"pool_sizes", pools},
                          {"worst_miss", worst},
                          {"hit_lower_bound", c.hit_lower_bound.str()},
                          {"epsilon_met", c.epsilon_met},
                          {"levels", level_certificates(res.family)}};
        if (!c.epsilon_met || !res.family.all_levels_fit_bound()) code = kVerifyFailed;
    }
    emit(r, o.out);
    return code;
}

// ---------------------------------------------------------------------------
// schedule
// ---------------------------------------------------------------------------

struct ScheduleOpts {
    std::string alpha = "4/5";
    std::uint64_t count = 3;
    std::uint64_t min_length = 1;
    std::uint64_t max_length = 16;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_schedule(const ScheduleOpts& o) {
    Report r{"schedule", o.seed};
    const Rational alpha = rational_flag("alpha", o.alpha);
    if (o.max_length > 20) throw BadParams("--max-length above 20 is too large for exact uniform distributions");
    RandomSource rs(o.seed);
    r.parameters = {{"alpha", to_string(alpha)}, {"count", o.count}, {"min_length", o.min_length},
                    {"max_length", o.max_length}, {"distribution", "uniform"}};
    std::vector<forbidden::ScheduledInterval> intervals;
    try {
        intervals = forbidden::interval_schedule([](std::uint64_t N) { return FiniteDistribution::uniform(N); }, alpha, o.count,
                                                 rs, {o.min_length, o.max_length});
    } catch (const std::runtime_error& e) {
        if (dynamic_cast<const std::invalid_argument*>(&e) != nullptr) throw;
        throw BadParams(e.what());
    }
    json ivs = json::array();
    json certs = json::array();
    for (const auto& iv : intervals) {
        ivs.push_back({{"index", iv.index}, {"n", iv.n}, {"N", iv.N}, {"threshold", iv.threshold.str()},
                       {"epsilon", iv.epsilon.str()}, {"stream_index", iv.result.stream_index},
                       {"family", io::to_json(iv.result.family)}});
        certs.push_back({{"index", iv.index}, {"avoid_probability", iv.result.avoid_probability.str()},
                         {"averaged_bound", iv.result.averaged_bound.str()}, {"levels", level_certificates(iv.result.family)}});
    }
    r.results = {{"intervals", ivs}};
    r.certificates = {{"intervals", certs}};
    emit(r, o.out);
    return kOk;
}

// ---------------------------------------------------------------------------
// adversary
// ---------------------------------------------------------------------------

struct AdversaryOpts {
    std::string dist;
    std::uint64_t uniform_length = 0;
    std::size_t n = 0;
    std::string epsilon = "1/2";
    bool truncated = false;
    std::string g;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_adversary(const AdversaryOpts& o) {
    Report r{"adversary", o.seed};
    if (o.dist.empty() == (o.uniform_length == 0)) throw BadParams("give exactly one of --dist or --uniform-length");
    if (o.uniform_length > 20) throw BadParams("--uniform-length above 20 is too large");
    const FiniteDistribution P = [&] {
        if (!o.dist.empty()) {
            try {
                return io::distribution_from_json(read_json_input(o.dist));
            } catch (const json::exception& e) {
                throw BadParams(std::string("distribution JSON: ") + e.what());
            }
        }
        return FiniteDistribution::uniform(o.uniform_length);
    }();
    const ExactProb eps = prob_flag("epsilon", o.epsilon);
    auto fam = o.truncated ? adversary::truncated_search(P, o.n, eps) : adversary::positional_family_search(P, o.n, eps);
    if (!o.g.empty()) fam.g = o.g;
    r.parameters = {{"n", o.n}, {"epsilon", eps.str()}, {"truncated", o.truncated}, {"distribution", io::to_json(P)}};
    r.results = {{"n", fam.n}, {"N", fam.positions()}, {"family", io::to_json(fam)}};
    r.certificates = {{"avoid_probability", fam.certificate.str()}, {"enumerated_part", fam.enumerated_part.str()}};
    emit(r, o.out);
    return fam.certificate < eps ? kOk : kVerifyFailed;
}

// ---------------------------------------------------------------------------
// avoid
// ---------------------------------------------------------------------------

struct AvoidOpts {
    std::string family;
    std::string levels;  // "lo-hi": random levels with floor(2^(alpha n)) strings each
    std::string alpha = "1/2";
    std::uint64_t length = 0;
    std::uint64_t budget = 1'000'000;
    std::uint64_t seed = 0;
    std::string out;
    std::string bits_out;
    std::string format = "ascii";
};

forbidden::LevelFamily random_levels(const Rational& alpha, std::uint64_t lo, std::uint64_t hi, RandomSource rs) {
    forbidden::LevelFamily fam(alpha);
    for (std::uint64_t n = lo; n <= hi; ++n) {
        RandomSource stream = rs.substream(n);
        fam.add_level(n, forbidden::FixedLevel{forbidden::sample_uniform_set(n, forbidden::size_bound(alpha, n), stream)});
    }
    return fam;
}

int cmd_avoid(const AvoidOpts& o) {
    Report r{"avoid", o.seed};
    const Rational alpha = rational_flag("alpha", o.alpha);
    if (o.family.empty() == o.levels.empty()) throw BadParams("give exactly one of --family or --levels");
    forbidden::LevelFamily fam;
    if (!o.family.empty()) {
        try {
            fam = io::family_from_json(read_json_input(o.family));
        } catch (const json::exception& e) {
            throw BadParams(std::string("family JSON: ") + e.what());
        }
    } else {
        const auto dash = o.levels.find('-');
        if (dash == std::string::npos) throw BadParams("--levels expects lo-hi");
        const auto lo = split_u64(o.levels.substr(0, dash));
        const auto hi = split_u64(o.levels.substr(dash + 1));
        if (lo.size() != 1 || hi.size() != 1 || lo[0] < 1 || lo[0] > hi[0] || hi[0] > 64) throw BadParams("--levels expects 1 <= lo <= hi <= 64");
        fam = random_levels(alpha, lo[0], hi[0], RandomSource(o.seed).substream(1000));
    }
    const avoider::AvoidanceInstance inst{fam, alpha, o.length, o.budget, o.seed};
    const auto res = avoider::build_avoiding_string(inst);
    r.parameters = {{"alpha", to_string(alpha)}, {"length", o.length}, {"budget", o.budget}};
    if (!o.levels.empty()) r.parameters["levels"] = o.levels;
    r.results = {{"success", res.success},
                 {"resamples", res.resamples},
                 {"residual_violations", res.residual_violations},
                 {"length", res.string.size()},
                 {"string_hex", res.string.to_hex()},
                 {"family", io::to_json(fam)}};
    if (res.success) r.certificates = {{"violations", 0}};
    if (!o.bits_out.empty()) io::write_bits(o.bits_out, res.string, bit_format(o.format));
    emit(r, o.out);
    if (!res.success) {
        std::cerr << "error: resample budget of " << o.budget << " exhausted with " << res.residual_violations
                  << " violations left\n";
        return kBudgetExhausted;
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// profile
// ---------------------------------------------------------------------------

struct ProfileOpts {
    std::string bits;
    std::size_t window = 0;
    std::size_t stride = 1;
    std::string out;
};

int cmd_profile(const ProfileOpts& o) {
    Report r{"profile", 0};
    const BitString x = read_bits_input(o.bits);
    const auto p = proxy::window_profile(x, o.window, o.stride);
    r.parameters = {{"bits", o.bits}, {"window", o.window}, {"stride", o.stride}};
    r.results = {{"offsets", p.offsets}, {"values", p.values}, {"min", p.min},   {"max", p.max},
                 {"mean", p.mean},       {"argmin", p.argmin}, {"whole", proxy::compress_size(x)},
                 {"note", "compression sizes are upper-bound heuristics, not certificates"}};
    emit(r, o.out);
    return kOk;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

void expect(bool ok, const std::string& what) {
    if (!ok) throw VerifyFailed(what);
}

void verify_level_certificates(const forbidden::LevelFamily& fam, const json& recorded) {
    expect(recorded.size() == fam.levels().size(), "level certificate count differs from family");
    for (const auto& c : recorded) {
        const auto len = c.at("length").get<std::uint64_t>();
        const BigInt card = fam.cardinality(len);
        expect(card.str() == c.at("cardinality").get<std::string>(), "cardinality at level " + std::to_string(len));
        expect(forbidden::size_bound(fam.alpha(), len).str() == c.at("bound").get<std::string>(),
               "size bound at level " + std::to_string(len));
        const bool fits = forbidden::fits_size_bound(card, fam.alpha(), len);
        expect(fits == c.at("fits").get<bool>(), "fits flag at level " + std::to_string(len));
        expect(fits, "level " + std::to_string(len) + " exceeds floor(2^(alpha n))");
    }
}

json verify_spread(const json& rep) {
    const auto& p = rep.at("parameters");
    std::optional<Rational> ratio;
    if (p.contains("ratio")) ratio = parse_rational(p.at("ratio").get<std::string>());
    const auto w = spreader::WeightSeries::from_preset(p.at("weights").get<std::string>(), ratio);
    const auto m0 = p.at("m0").get<unsigned>();
    const Rational cert = spreader::m0_certificate(w, m0);
    expect(to_string(cert) == rep.at("certificates").at("m0_certificate").get<std::string>(), "m0 certificate value");
    expect(cert <= 1, "m0 certificate exceeds 1");
    const auto alloc = io::allocation_from_json(rep.at("results").at("allocation"));
    for (unsigned m = alloc.m0(); m <= alloc.max_level(); ++m) {
        expect(alloc.count(m) == spreader::level_count(w, m), "level count at " + std::to_string(m));
    }
    expect(to_string(alloc.budget_used()) == rep.at("certificates").at("budget_used").get<std::string>(), "budget value");
    expect(alloc.budget_used() <= 1, "budget exceeds 1");
    const auto L = p.at("length").get<std::uint64_t>();
    expect(alloc.horizon() >= L, "allocation does not cover the requested length");
    return {{"checked", {"m0_certificate", "level_counts", "budget_used", "coverage"}}};
}

json verify_family(const json& rep) {
    const auto& p = rep.at("parameters");
    const auto& res = rep.at("results");
    const auto& cert = rep.at("certificates");
    const auto fam = io::family_from_json(res.at("family"));
    const Rational alpha = parse_rational(p.at("alpha").get<std::string>());
    const ExactProb eps = ExactProb::parse(p.at("epsilon").get<std::string>());
    expect(fam.alpha() == alpha, "family alpha");
    verify_level_certificates(fam, cert.at("levels"));
    if (p.at("mode") == "two-level") {
        const auto n = res.at("n").get<std::uint64_t>();
        const auto N = res.at("N").get<std::uint64_t>();
        const BigInt t(res.at("threshold").get<std::string>());
        const BigInt s(res.at("sample_size").get<std::string>());
        expect(t == pow2(forbidden::half_up(n)), "threshold");
        expect(s == forbidden::size_bound(alpha, n), "sample size");
        expect(fam.cardinality(n) == s, "level n cardinality");
        const Rational miss = forbidden::two_level_miss_bound(alpha, n);
        expect(to_string(miss) == cert.at("miss_bound").get<std::string>(), "miss bound value");
        expect(miss < eps.value(), "miss bound not below epsilon");
        const ExactProb worst = forbidden::miss_probability_random_set(std::min<BigInt>(t + 1, pow2(n)), n, s);
        expect(worst.str() == cert.at("worst_miss").get<std::string>(), "worst-case miss");
        expect(N % n == 0 && forbidden::fits_size_bound(forbidden::count_simple(N, n, t), alpha, N), "top level size");
    } else {
        const auto& lv = fam.levels();
        const auto& pools = cert.at("pool_sizes");
        const auto& worst = cert.at("worst_miss");
        Rational max_miss = 0;
        std::size_t j = 0;
        for (const auto& [len, set] : lv) {
            const auto* sampled = std::get_if<forbidden::SampledLevel>(&set);
            if (sampled == nullptr) continue;
            expect(j < pools.size(), "pool size entries");
            const BigInt pool = sampled->pool.size();
            expect(pool.str() == pools[j].get<std::string>(), "pool size at level " + std::to_string(len));
            const BigInt threshold(p.at("thresholds").at(j).get<std::uint64_t>());
            const ExactProb w = forbidden::miss_probability(pool, std::min<BigInt>(threshold + 1, pool), sampled->sample_size);
            expect(w.str() == worst[j].get<std::string>(), "worst miss at level " + std::to_string(len));
            max_miss = std::max(max_miss, w.value());
            ++j;
        }
        expect(j == pools.size(), "pool size entries");
        const bool met = max_miss < eps.value();
        expect(met == cert.at("epsilon_met").get<bool>(), "epsilon_met flag");
        expect(met, "hit lower bound does not exceed 1 - epsilon");
    }
    return {{"checked", {"size_bounds", "miss_bounds"}}};
}

json verify_schedule(const json& rep) {
    const auto& ivs = rep.at("results").at("intervals");
    const auto& certs = rep.at("certificates").at("intervals");
    expect(ivs.size() == certs.size(), "interval count");
    std::uint64_t prev_end = 0;
    for (std::size_t i = 0; i < ivs.size(); ++i) {
        const auto& iv = ivs[i];
        const auto n = iv.at("n").get<std::uint64_t>();
        const auto N = iv.at("N").get<std::uint64_t>();
        expect(n > prev_end && 2 * n <= N, "interval " + std::to_string(i + 1) + " is not disjoint/ordered");
        prev_end = N;
        const ExactProb eps = ExactProb::parse(iv.at("epsilon").get<std::string>());
        expect(eps.value() == Rational(1, pow2(i + 1)), "epsilon of interval " + std::to_string(i + 1));
        const auto fam = io::family_from_json(iv.at("family"));
        verify_level_certificates(fam, certs[i].at("levels"));
        const auto avoid = forbidden::family_avoid_probability(FiniteDistribution::uniform(N), fam);
        expect(avoid.str() == certs[i].at("avoid_probability").get<std::string>(), "avoid probability of interval " + std::to_string(i + 1));
        expect(avoid < eps, "interval " + std::to_string(i + 1) + " avoid probability not below epsilon");
    }
    return {{"checked", {"disjointness", "size_bounds", "avoid_probabilities"}}};
}

json verify_adversary(const json& rep) {
    const auto P = io::distribution_from_json(rep.at("parameters").at("distribution"));
    const auto fam = io::positional_family_from_json(rep.at("results").at("family"));
    const ExactProb eps = ExactProb::parse(rep.at("parameters").at("epsilon").get<std::string>());
    const auto avoid = adversary::avoid_probability(P, fam);
    expect(avoid.str() == rep.at("certificates").at("avoid_probability").get<std::string>(), "avoid probability value");
    expect(avoid == fam.certificate, "family certificate");
    expect(avoid < eps, "avoid probability not below epsilon");
    return {{"checked", {"avoid_probability"}}};
}

json verify_avoid(const json& rep) {
    const auto& res = rep.at("results");
    const auto fam = io::family_from_json(res.at("family"));
    const auto x = BitString::from_hex(res.at("string_hex").get<std::string>(), res.at("length").get<std::size_t>());
    const auto v = avoider::scan_violations(x, fam);
    expect(res.at("success").get<bool>(), "report records a failed run");
    expect(v.empty(), std::to_string(v.size()) + " forbidden occurrences in the recorded string");
    for (const auto& [len, lv] : fam.levels()) {
        expect(forbidden::fits_size_bound(fam.cardinality(len), parse_rational(rep.at("parameters").at("alpha").get<std::string>()), len),
               "level " + std::to_string(len) + " exceeds the size bound");
    }
    return {{"checked", {"violations", "size_bounds"}}};
}

struct VerifyOpts {
    std::string report;
    std::string out;
};

int cmd_verify(const VerifyOpts& o) {
    const json rep = read_json_input(o.report);
    Report r{"verify", 0};
    r.parameters = {{"report", o.report}};
    std::string command;
    try {
        command = rep.at("command").get<std::string>();
        r.results["verified_command"] = command;
        if (command == "spread") {
            r.results["detail"] = verify_spread(rep);
        } else if (command == "family") {
            r.results["detail"] = verify_family(rep);
        } else if (command == "schedule") {
            r.results["detail"] = verify_schedule(rep);
        } else if (command == "adversary") {
            r.results["detail"] = verify_adversary(rep);
        } else if (command == "avoid") {
            r.results["detail"] = verify_avoid(rep);
        } else if (command == "check-windows" || command == "profile" || command == "verify") {
            r.results["detail"] = {{"checked", json::array()}, {"note", "report carries no certificates"}};
        } else {
            throw BadParams("unknown report command '" + command + "'");
        }
    } catch (const json::exception& e) {
        throw BadParams(std::string("malformed report: ") + e.what());
    } catch (const std::invalid_argument& e) {
        // a report whose embedded data no longer parses cannot be re-derived
        throw VerifyFailed(e.what());
    } catch (const std::domain_error& e) {
        throw VerifyFailed(e.what());
    }
    r.results["ok"] = true;
    emit(r, o.out);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ecs: spreading, forbidden-substring families, adversaries and avoiders"};
    app.require_subcommand(1);

    SpreadOpts spread;
    auto* sp = app.add_subcommand("spread", "spread a random source along an allocation");
    sp->add_option("--weights", spread.weights, "weight preset: zero, inverse-triangular, geometric")->capture_default_str();
    sp->add_option("--ratio", spread.ratio, "ratio for the geometric preset (num/den)");
    sp->add_option("--m0", spread.m0, "override the lowest level (must pass the budget certificate)");
    sp->add_option("--length", spread.length, "number of output bits")->required();
    sp->add_option("--seed", spread.seed)->capture_default_str();
    sp->add_option("--out", spread.out, "bit file to write")->required();
    sp->add_option("--alloc-out", spread.alloc_out, "allocation JSON (default <out>.alloc.json)");
    sp->add_option("--format", spread.format, "ascii or packed")->capture_default_str();
    sp->add_option("--report", spread.report, "report path (default stdout)");

    CheckOpts check;
    auto* cw = app.add_subcommand("check-windows", "verify window coverage and recovery on a spread output");
    cw->add_option("--bits", check.bits)->required();
    cw->add_option("--alloc", check.alloc)->required();
    cw->add_option("--m-max", check.m_max)->capture_default_str();
    cw->add_option("--exhaustive-max", check.exhaustive_max, "check every window for levels up to this")->capture_default_str();
    cw->add_option("--samples", check.samples, "sampled windows per higher level")->capture_default_str();
    cw->add_option("--seed", check.seed)->capture_default_str();
    cw->add_option("--out", check.out, "report path (default stdout)");

    FamilyOpts family;
    auto* fa = app.add_subcommand("family", "build a two-level or layered forbidden family");
    fa->add_option("--alpha", family.alpha)->capture_default_str();
    fa->add_option("--epsilon", family.epsilon)->capture_default_str();
    fa->add_option("--n-min", family.n_min)->capture_default_str();
    fa->add_option("--lengths", family.lengths, "layered mode: n_1,...,n_k");
    fa->add_option("--thresholds", family.thresholds, "layered mode: t_1,...,t_{k-1}");
    fa->add_option("--seed", family.seed)->capture_default_str();
    fa->add_option("--out", family.out, "report path (default stdout)");

    ScheduleOpts schedule;
    auto* sc = app.add_subcommand("schedule", "derandomized families on disjoint intervals against uniform distributions");
    sc->add_option("--alpha", schedule.alpha)->capture_default_str();
    sc->add_option("--count", schedule.count)->capture_default_str();
    sc->add_option("--min-length", schedule.min_length)->capture_default_str();
    sc->add_option("--max-length", schedule.max_length)->capture_default_str();
    sc->add_option("--seed", schedule.seed)->capture_default_str();
    sc->add_option("--out", schedule.out, "report path (default stdout)");

    AdversaryOpts adv;
    auto* ad = app.add_subcommand("adversary", "first positional family with small avoid probability");
    ad->add_option("--dist", adv.dist, "distribution JSON");
    ad->add_option("--uniform-length", adv.uniform_length, "use the uniform distribution on this length");
    ad->add_option("--n", adv.n, "forbidden string length")->required();
    ad->add_option("--epsilon", adv.epsilon)->capture_default_str();
    ad->add_flag("--truncated", adv.truncated, "search the enumerated part against epsilon - deficit");
    ad->add_option("--g", adv.g, "label of the complexity bound, recorded only");
    ad->add_option("--seed", adv.seed)->capture_default_str();
    ad->add_option("--out", adv.out, "report path (default stdout)");

    AvoidOpts avoid;
    auto* av = app.add_subcommand("avoid", "construct a string avoiding a forbidden family");
    av->add_option("--family", avoid.family, "family JSON");
    av->add_option("--levels", avoid.levels, "random family on levels lo-hi");
    av->add_option("--alpha", avoid.alpha)->capture_default_str();
    av->add_option("--length", avoid.length)->required();
    av->add_option("--budget", avoid.budget, "maximum resamples")->capture_default_str();
    av->add_option("--seed", avoid.seed)->capture_default_str();
    av->add_option("--out", avoid.out, "report path (default stdout)");
    av->add_option("--bits-out", avoid.bits_out, "also write the string as a bit file");
    av->add_option("--format", avoid.format, "ascii or packed")->capture_default_str();

    ProfileOpts profile;
    auto* pr = app.add_subcommand("profile", "compression-size profile over sliding windows");
    pr->add_option("--bits", profile.bits)->required();
    pr->add_option("--window", profile.window)->required();
    pr->add_option("--stride", profile.stride)->capture_default_str();
    pr->add_option("--out", profile.out, "report path (default stdout)");

    VerifyOpts verify;
    auto* ve = app.add_subcommand("verify", "re-derive every certificate in a report");
    ve->add_option("--report", verify.report)->required();
    ve->add_option("--out", verify.out, "report path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kBadParams;
    }

    try {
        if (*sp) return cmd_spread(spread);
        if (*cw) return cmd_check_windows(check);
        if (*fa) return cmd_family(family);
        if (*sc) return cmd_schedule(schedule);
        if (*ad) return cmd_adversary(adv);
        if (*av) return cmd_avoid(avoid);
        if (*pr) return cmd_profile(profile);
        if (*ve) return cmd_verify(verify);
    } catch (const VerifyFailed& e) {
        std::cerr << "verification failed: " << e.what() << "\n";
        return kVerifyFailed;
    } catch (const BadParams& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadParams;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadParams;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadParams;
    } catch (const spreader::UncoveredPosition& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadParams;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadParams;
    }
    return kBadParams;
}
