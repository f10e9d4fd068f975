#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "oracles.hpp"
#include "seqsel/selection.hpp"
#include "seqsel/shaping.hpp"

using namespace seqsel;
using namespace seqsel::selection;

namespace {

SelectionConfig make_cfg(Scheme scheme, std::size_t n_t, std::size_t n = 16) {
    SelectionConfig cfg;
    cfg.scheme = scheme;
    cfg.n_t = n_t;
    cfg.n = n;
    return cfg;
}

// ESS over the 64 amplitudes of 16 4D symbols with an 88-bit DM input, then PAS.
struct SmallChain {
    shaping::EssTrellis trellis = [] {
        shaping::ShapingConfig c;
        c.blocklength = 64;
        c.rate = 88.0 / 64.0;
        return shaping::ess_build_trellis(c);
    }();
    static constexpr std::size_t kDm = 88;
    static constexpr std::size_t kSigns = 64;

    Symbol4DSequence operator()(const Bits& bits) const {
        REQUIRE(bits.size() == kDm + kSigns);
        const auto amps = shaping::ess_encode(std::span(bits).first(kDm), trellis);
        return shaping::pas_map(amps, std::span(bits).subspan(kDm));
    }
    Bits invert(const Symbol4DSequence& s) const {
        const auto [amps, signs] = shaping::pas_demap_hard(s, trellis.alphabet());
        Bits out = shaping::ess_decode(amps, trellis);
        out.insert(out.end(), signs.begin(), signs.end());
        return out;
    }
};

Symbol4DSequence random_block(std::size_t n, std::uint64_t seed) {
    RngStream rng(seed, StreamTag::test);
    Symbol4DSequence s(n);
    auto level = [&] { return 2.0 * static_cast<double>(rng.below(8)) - 7.0; };
    for (auto& v : s) {
        v = {Complex(level(), level()), Complex(level(), level())};
    }
    return s;
}

// Arbitrary deterministic cost with few ties.
double toy_cost(std::span<const Symbol4D> s, std::size_t offset) {
    double c = 0.0;
    for (std::size_t k = offset; k < s.size(); ++k) {
        c += static_cast<double>(k - offset + 1) * s[k].x.real() + 0.5 * s[k].y.imag();
    }
    return c;
}

}  // namespace

TEST_CASE("pilot overhead counts") {
    CHECK(make_cfg(Scheme::bsss, 1).pilot_bits() == 0);
    CHECK(make_cfg(Scheme::siss, 1).pilot_symbols() == 0);
    CHECK(make_cfg(Scheme::bsss, 2).pilot_bits() == 1);
    CHECK(make_cfg(Scheme::siss, 2).pilot_symbols() == 1);
    CHECK(make_cfg(Scheme::bsss, 16).pilot_bits() == 4);
    CHECK(make_cfg(Scheme::siss, 16).pilot_symbols() == 1);
    CHECK(make_cfg(Scheme::siss, 17).pilot_symbols() == 2);
    CHECK(make_cfg(Scheme::bsss, 256).pilot_bits() == 8);
    CHECK(make_cfg(Scheme::siss, 256).pilot_symbols() == 2);
    CHECK_THROWS_AS(make_cfg(Scheme::bsss, 0).validate(), ConfigError);
}

TEST_CASE("scrambler books") {
    const auto a = generate_scrambler_book(5, 16, 100);
    const auto b = generate_scrambler_book(5, 16, 100);
    CHECK(a.masks == b.masks);
    CHECK(a.masks.size() == 15);
    CHECK(generate_scrambler_book(5, 2, 100).masks.size() == 1);
    // Smaller books are prefixes of larger ones.
    const auto small = generate_scrambler_book(5, 4, 100);
    CHECK(std::equal(small.masks.begin(), small.masks.end(), a.masks.begin()));
    for (std::size_t i = 0; i < a.masks.size(); ++i) {
        CHECK(a.masks[i].size() == 100);
        CHECK(a.masks[i] != Bits(100, 0));
        for (std::size_t j = 0; j < i; ++j) {
            CHECK(a.masks[i] != a.masks[j]);
        }
    }
    CHECK(generate_scrambler_book(6, 16, 100).masks != a.masks);
}

TEST_CASE("permutation books") {
    const auto a = generate_permutation_book(9, 256, 64);
    CHECK(a.perms == generate_permutation_book(9, 256, 64).perms);
    CHECK(a.perms.size() == 255);
    CHECK(generate_permutation_book(9, 2, 64).perms.size() == 1);
    const auto small = generate_permutation_book(9, 8, 64);
    CHECK(std::equal(small.perms.begin(), small.perms.end(), a.perms.begin()));
    std::vector<std::uint32_t> identity(64);
    std::iota(identity.begin(), identity.end(), 0U);
    for (std::size_t i = 0; i < a.perms.size(); ++i) {
        auto sorted = a.perms[i];
        std::sort(sorted.begin(), sorted.end());
        CHECK(sorted == identity);
        CHECK(a.perms[i] != identity);
        for (std::size_t j = 0; j < i; ++j) {
            CHECK(a.perms[i] != a.perms[j]);
        }
    }
}

TEST_CASE("pilot constellation") {
    const PilotBook pilots;
    std::map<std::pair<double, double>, int> corners;
    for (const auto& p : pilots.points()) {
        CHECK(std::abs(p.x.real()) == 7.0);
        CHECK(std::abs(p.x.imag()) == 7.0);
        CHECK(std::abs(p.y.real()) == 7.0);
        CHECK(std::abs(p.y.imag()) == 7.0);
        ++corners[{p.x.real(), p.x.imag()}];
    }
    CHECK(corners.size() == 4);
    CHECK(pilots.min_distance() == doctest::Approx(14.0));
    CHECK(pilots.energy() == doctest::Approx(196.0));
    for (std::size_t i = 0; i < 16; ++i) {
        CHECK(pilots.detect(pilots.point(i)) == i);
    }
    // Bits (3,2) on x and (1,0) on y, 1 = negative rail.
    CHECK(pilots.point(0).x == Complex(7, 7));
    CHECK(pilots.point(0).y == Complex(7, 7));
    CHECK(pilots.point(0b1001).x == Complex(-7, 7));
    CHECK(pilots.point(0b1001).y == Complex(7, -7));
}

TEST_CASE("pilot symbols carry the index most significant nibble first") {
    const PilotBook pilots;
    const auto cfg = make_cfg(Scheme::siss, 256);
    const auto s = pilot_symbols(0xA5, cfg, pilots);
    REQUIRE(s.size() == 2);
    CHECK(pilots.detect(s[0]) == 0xA);
    CHECK(pilots.detect(s[1]) == 0x5);
    CHECK(detect_pilot_index(s, pilots, cfg) == 0xA5);
    CHECK(pilot_symbols(0, make_cfg(Scheme::siss, 1), pilots).empty());
}

TEST_CASE("argmin breaks ties toward the lowest index") {
    const std::vector<double> c{3.0, 1.0, 1.0, 2.0};
    CHECK(argmin_cost(c) == 1);
    CHECK(argmin_cost(std::vector<double>{5.0}) == 0);
}

TEST_CASE("bit-scrambling selection") {
    const SmallChain chain;
    auto dm = [&](const Bits& b) { return chain(b); };
    const std::size_t total = SmallChain::kDm + SmallChain::kSigns;

    SUBCASE("single candidate is plain shaping") {
        const auto cfg = make_cfg(Scheme::bsss, 1);
        RngStream rng(1, StreamTag::test);
        const auto b = rng.bits(total);
        const auto book = generate_scrambler_book(1, 1, total);
        const auto res = bsss_encode(b, book, cfg, dm, nullptr);
        CHECK(res.index == 0);
        CHECK(res.symbols == chain(b));
        CHECK(bsss_candidate_bits(b, book, cfg, 0) == b);
    }
    SUBCASE("two candidates are 0|b and 1|(t xor b)") {
        const auto cfg = make_cfg(Scheme::bsss, 2);
        RngStream rng(2, StreamTag::test);
        const auto b = rng.bits(total - 1);
        const auto book = generate_scrambler_book(2, 2, b.size());
        Bits c0{0};
        c0.insert(c0.end(), b.begin(), b.end());
        Bits c1{1};
        for (std::size_t i = 0; i < b.size(); ++i) {
            c1.push_back(b[i] ^ book.masks[0][i]);
        }
        CHECK(bsss_candidate_bits(b, book, cfg, 0) == c0);
        CHECK(bsss_candidate_bits(b, book, cfg, 1) == c1);
        std::vector<Bits> seen;
        auto spy = [&](const Bits& bits) {
            seen.push_back(bits);
            return chain(bits);
        };
        bsss_encode(b, book, cfg, spy, toy_cost);
        CHECK(seen == std::vector<Bits>{c0, c1});
    }
    SUBCASE("chosen candidate minimizes the independently rescored cost") {
        const auto cfg = make_cfg(Scheme::bsss, 4);
        const auto book = generate_scrambler_book(3, 4, total - 2);
        for (std::uint64_t trial = 0; trial < 20; ++trial) {
            RngStream rng(100 + trial, StreamTag::test);
            const auto b = rng.bits(total - 2);
            const auto res = bsss_encode(b, book, cfg, dm, toy_cost);
            double best = 1e300;
            std::size_t best_i = 0;
            for (std::size_t i = 0; i < 4; ++i) {
                const double c = toy_cost(chain(bsss_candidate_bits(b, book, cfg, i)), 0);
                if (c < best) {
                    best = c;
                    best_i = i;
                }
            }
            CHECK(res.index == best_i);
            CHECK(res.costs[res.index] == best);
        }
    }
    SUBCASE("noiseless roundtrip") {
        for (std::size_t n_t : {1UL, 2UL, 4UL, 8UL, 16UL}) {
            const auto cfg = make_cfg(Scheme::bsss, n_t);
            const std::size_t info = total - cfg.pilot_bits();
            const auto book = generate_scrambler_book(4, n_t, info);
            for (std::uint64_t trial = 0; trial < 10; ++trial) {
                RngStream rng(200 + trial, StreamTag::test, n_t);
                const auto b = rng.bits(info);
                const auto res = bsss_encode(b, book, cfg, dm, toy_cost);
                CHECK(bsss_decode(chain.invert(res.symbols), book, cfg) == b);
            }
        }
    }
    SUBCASE("zero pilot leaves the payload untouched") {
        const auto cfg = make_cfg(Scheme::bsss, 4);
        const auto book = generate_scrambler_book(4, 4, 6);
        const Bits rx{0, 0, 1, 0, 1, 1, 0, 1};
        CHECK(bsss_decode(rx, book, cfg) == Bits{1, 0, 1, 1, 0, 1});
    }
    SUBCASE("out-of-range pilot index") {
        const auto cfg = make_cfg(Scheme::bsss, 3);
        const auto book = generate_scrambler_book(4, 3, 4);
        CHECK_THROWS_AS(bsss_decode(Bits{1, 1, 0, 0, 0, 0}, book, cfg), DecodeError);
    }
}

TEST_CASE("symbol-interleaving selection") {
    const PilotBook pilots;
    SUBCASE("single candidate carries no pilot") {
        const auto cfg = make_cfg(Scheme::siss, 1);
        const auto s = random_block(16, 1);
        const auto book = generate_permutation_book(1, 1, 16);
        const auto res = siss_encode(s, book, pilots, cfg, nullptr);
        CHECK(res.symbols == s);
        CHECK(res.index == 0);
    }
    SUBCASE("two candidates are p|s and q|T(s)") {
        const auto cfg = make_cfg(Scheme::siss, 2);
        const auto s = random_block(16, 2);
        const auto book = generate_permutation_book(2, 2, 16);
        const auto c0 = siss_candidate(s, book, pilots, cfg, 0);
        const auto c1 = siss_candidate(s, book, pilots, cfg, 1);
        CHECK(c0[0] == pilots.point(0));
        CHECK(c1[0] == pilots.point(1));
        CHECK(std::equal(s.begin(), s.end(), c0.begin() + 1));
        for (std::size_t j = 0; j < 16; ++j) {
            CHECK(c1[1 + j] == s[book.perms[0][j]]);
        }
        const auto res = siss_encode(s, book, pilots, cfg, toy_cost);
        REQUIRE(res.costs.size() == 2);
        CHECK(res.costs[0] == toy_cost(c0, 1));
        CHECK(res.costs[1] == toy_cost(c1, 1));
        CHECK(res.symbols == (res.index == 0 ? c0 : c1));
    }
    SUBCASE("noiseless roundtrip and symbol multiset preservation") {
        for (std::size_t n_t : {1UL, 2UL, 16UL, 256UL}) {
            const auto cfg = make_cfg(Scheme::siss, n_t, 64);
            const auto book = generate_permutation_book(3, n_t, 64);
            for (std::uint64_t trial = 0; trial < 5; ++trial) {
                const auto s = random_block(64, 300 + trial);
                const auto res = siss_encode(s, book, pilots, cfg, toy_cost);
                CHECK(res.symbols.size() == 64 + cfg.pilot_symbols());
                const auto dec = siss_decode(res.symbols, book, pilots, cfg);
                CHECK(dec.index == res.index);
                CHECK(dec.payload == s);
                auto key = [](const Symbol4D& a, const Symbol4D& b) {
                    return std::tuple(a.x.real(), a.x.imag(), a.y.real(), a.y.imag()) <
                           std::tuple(b.x.real(), b.x.imag(), b.y.real(), b.y.imag());
                };
                Symbol4DSequence p(res.symbols.begin() + static_cast<long>(cfg.pilot_symbols()),
                                   res.symbols.end());
                auto q = s;
                std::sort(p.begin(), p.end(), key);
                std::sort(q.begin(), q.end(), key);
                CHECK(p == q);
            }
        }
    }
    SUBCASE("detected index outside the book") {
        const auto cfg = make_cfg(Scheme::siss, 3);
        const auto book = generate_permutation_book(3, 3, 16);
        auto s = random_block(17, 4);
        s[0] = pilots.point(5);
        CHECK_THROWS_AS(siss_decode(s, book, pilots, cfg), DecodeError);
    }
    SUBCASE("pilot detection at 12 dB per 4D") {
        // SNR referenced to the pilot energy.
        const double var_2d = pilots.energy() / std::pow(10.0, 1.2) / 2.0;
        RngStream rng(5, StreamTag::test);
        std::size_t errors = 0;
        const std::size_t trials = 200000;
        for (std::size_t t = 0; t < trials; ++t) {
            const std::size_t label = rng.below(16);
            Symbol4D r = pilots.point(label);
            r.x += rng.complex_gaussian(var_2d);
            r.y += rng.complex_gaussian(var_2d);
            errors += pilots.detect(r) != label ? 1 : 0;
        }
        CHECK(static_cast<double>(errors) / trials < 1e-3);
    }
}

TEST_CASE("windowed kurtosis") {
    SUBCASE("constant energy gives one") {
        Symbol4DSequence s(64, Symbol4D{Complex(3, 1), Complex(1, 3)});
        CHECK(wk_metric(s, 16, 8) == doctest::Approx(1.0));
    }
    SUBCASE("a single nonzero symbol in a window gives the window length") {
        Symbol4DSequence s(8, Symbol4D{});
        s[3] = {Complex(5, 5), Complex(1, 1)};
        CHECK(wk_metric(s, 8, 8) == doctest::Approx(8.0));
    }
    SUBCASE("matches the naive computation") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto s = random_block(256, 40 + seed);
            for (auto [w, st] : {std::pair{128UL, 64UL}, {32UL, 5UL}, {256UL, 1UL}, {7UL, 7UL}}) {
                CHECK(wk_metric(s, w, st) ==
                      doctest::Approx(oracle::windowed_kurtosis(s, w, st, false)).epsilon(1e-12));
                CHECK(wk_metric(s, w, st, WkAggregate::max) ==
                      doctest::Approx(oracle::windowed_kurtosis(s, w, st, true)).epsilon(1e-12));
            }
        }
    }
    SUBCASE("permutation invariance only for a single window") {
        const auto s = random_block(64, 50);
        const auto book = generate_permutation_book(1, 2, 64);
        Symbol4DSequence p(64);
        for (std::size_t j = 0; j < 64; ++j) {
            p[j] = s[book.perms[0][j]];
        }
        CHECK(wk_metric(p, 64, 64) == doctest::Approx(wk_metric(s, 64, 64)).epsilon(1e-12));
        // Witness: cluster the energetic symbols into one half.
        Symbol4DSequence a(64, Symbol4D{Complex(1, 1), Complex(1, 1)});
        for (std::size_t k = 0; k < 64; k += 2) {
            a[k] = {Complex(7, 7), Complex(7, 7)};
        }
        auto b = a;
        std::stable_partition(b.begin(), b.end(), [](const Symbol4D& v) { return v.x.real() > 1; });
        CHECK(wk_metric(a, 64, 64) == doctest::Approx(wk_metric(b, 64, 64)));
        CHECK(wk_metric(a, 16, 16) != doctest::Approx(wk_metric(b, 16, 16)));
    }
    CHECK_THROWS_AS(wk_metric(random_block(8, 1), 9, 1), ConfigError);
    CHECK_THROWS_AS(wk_metric(random_block(8, 1), 4, 5), ConfigError);
    CHECK_THROWS_AS(wk_metric(Symbol4DSequence(8, Symbol4D{}), 4, 4), NumericalError);
}

TEST_CASE("emulated nonlinear interference metric") {
    NliMetricConfig mc;
    mc.fiber.n_spans = 2;
    mc.wdm.n_channels = 1;
    mc.wdm.sps = 4;
    mc.wdm.launch_power_dbm = 4.0;
    const auto s = random_block(64, 60);
    double norm2 = 0.0;
    for (const auto& v : s) {
        norm2 += v.energy();
    }
    SUBCASE("linear fiber costs nothing") {
        auto lin = mc;
        lin.fiber.gamma_per_w_km = 0.0;
        CHECK(std::sqrt(nli_metric(s, 0, lin) / norm2) < 1e-6);
    }
    SUBCASE("cost vanishes monotonically with power") {
        double prev = 1e300;
        for (double p : {6.0, 3.0, 0.0, -3.0, -6.0, -20.0}) {
            auto c = mc;
            c.wdm.launch_power_dbm = p;
            const double cost = nli_metric(s, 0, c);
            CHECK(cost < prev);
            prev = cost;
        }
        CHECK(std::sqrt(prev / norm2) < 1e-3);
    }
    SUBCASE("pure self-phase modulation is removed by the phase compensation") {
        auto spm = mc;
        spm.fiber.n_spans = 1;
        spm.fiber.beta2_ps2_per_km = 0.0;
        const Symbol4DSequence flat(64, Symbol4D{Complex(5, 5), Complex(5, 5)});
        CHECK(std::sqrt(nli_metric(flat, 0, spm) / (64 * 100.0)) < 1e-3);
    }
    SUBCASE("payload offset excludes the pilots") {
        const double full = nli_metric(s, 0, mc);
        const double tail = nli_metric(s, 2, mc);
        CHECK(tail < full);
    }
}

TEST_CASE("nested books make the selected cost nonincreasing per block") {
    const auto book = generate_permutation_book(8, 16, 32);
    const PilotBook pilots;
    const auto wk = make_wk_metric(8, 4);
    for (std::uint64_t b = 0; b < 50; ++b) {
        const auto s = random_block(32, 500 + b);
        double prev = 1e300;
        for (std::size_t n_t : {1UL, 2UL, 4UL, 8UL, 16UL}) {
            auto cfg = make_cfg(Scheme::siss, n_t, 32);
            const auto res = siss_encode(s, book, pilots, cfg, wk);
            CHECK(res.costs[res.index] <= prev);
            prev = res.costs[res.index];
        }
    }
}
