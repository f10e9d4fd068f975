#include <cmath>
#include <functional>
#include <ostream>

#include "seqsel/fft.hpp"
#include "seqsel/harness.hpp"
#include "seqsel/receiver.hpp"

namespace seqsel::harness {

namespace {

using Check = std::pair<const char*, std::function<bool()>>;

bool ess_roundtrip() {
    shaping::ShapingConfig cfg;
    cfg.blocklength = 6;
    cfg.rate = 1.3;
    const auto t = shaping::ess_build_trellis(cfg);
    const std::size_t k = cfg.input_bits();
    for (std::uint64_t i = 0; i < (1ULL << k); ++i) {
        const auto bits = shaping::index_to_bits(shaping::BigInt(i), k);
        const auto amps = shaping::ess_encode(bits, t);
        if (t.energy_of(amps) > t.emax() || shaping::ess_decode(amps, t) != bits) {
            return false;
        }
    }
    return true;
}

bool mb_entropy() {
    const shaping::AmplitudeAlphabet alphabet;
    const auto mb = shaping::mb_fit(1.5, alphabet);
    return std::abs(shaping::entropy_bits(mb.probs) - 1.5) < 1e-9;
}

bool pas_roundtrip() {
    RngStream rng(1, StreamTag::test, 1);
    const shaping::AmplitudeAlphabet alphabet;
    AmplitudeSequence amps(400);
    for (auto& a : amps) {
        a = alphabet.levels()[rng.below(4)];
    }
    const auto signs = rng.bits(400);
    const auto [a2, s2] = shaping::pas_demap_hard(shaping::pas_map(amps, signs), alphabet);
    return a2 == amps && s2 == signs;
}

bool back_to_back() {
    RngStream rng(1, StreamTag::test, 2);
    Symbol4DSequence s(64);
    for (auto& v : s) {
        v = {Complex(2.0 * rng.below(4) - 3.0, 2.0 * rng.below(4) - 3.0),
             Complex(2.0 * rng.below(4) - 3.0, 2.0 * rng.below(4) - 3.0)};
    }
    channel::WdmConfig wdm;
    wdm.n_channels = 1;
    wdm.sps = 4;
    const auto f = channel::rrc_modulate(s, wdm, 20.0);
    receiver::RxChain rx;
    rx.sps = 4;
    rx.rolloff = wdm.rolloff;
    rx.tx_scale = channel::tx_amplitude_scale(wdm.launch_power_w(), wdm.sps, 20.0);
    const auto r = receiver::matched_filter_sample(f, rx);
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (std::abs(r[i].x - s[i].x) > 1e-9 || std::abs(r[i].y - s[i].y) > 1e-9) {
            return false;
        }
    }
    return true;
}

bool spm_phase() {
    channel::FiberParams fiber;
    fiber.beta2_ps2_per_km = 0.0;
    fiber.n_spans = 1;
    channel::FieldWaveform f;
    const double p = 1e-3;
    f.x.assign(16, Complex(std::sqrt(p), 0.0));
    f.y.assign(16, Complex(0.0, 0.0));
    f.sample_rate_ghz = 100.0;
    const auto out = channel::ssfm_span(f, fiber, {});
    const double alpha = fiber.alpha_db_per_km * std::log(10.0) / 10.0;
    const double leff = (1.0 - std::exp(-alpha * fiber.span_length_km)) / alpha;
    const double expected = 8.0 / 9.0 * fiber.gamma_per_w_km * p * leff;
    return std::abs(std::arg(out.x[0]) - expected) < 1e-6 * expected;
}

bool noiseless_air() {
    RngStream rng(1, StreamTag::test, 3);
    const shaping::AmplitudeAlphabet alphabet;
    AmplitudeSequence amps(4 * 2000);
    for (auto& a : amps) {
        a = alphabet.levels()[rng.below(4)];
    }
    const auto s = shaping::pas_map(amps, rng.bits(amps.size()));
    const std::vector<double> uniform(4, 0.25);
    const auto air = receiver::air_bitwise(s, s, alphabet, uniform);
    return std::abs(air.air_bits_per_4d - 12.0) < 1e-6;
}

bool selection_roundtrip() {
    selection::SelectionConfig sc;
    sc.n = 64;
    sc.n_t = 16;
    sc.scheme = selection::Scheme::siss;
    RngStream rng(1, StreamTag::test, 4);
    Symbol4DSequence s(sc.n);
    for (auto& v : s) {
        v = {Complex(2.0 * rng.below(4) - 3.0, 1.0), Complex(1.0, 2.0 * rng.below(4) - 3.0)};
    }
    const auto book = selection::generate_permutation_book(7, sc.n_t, sc.n);
    const selection::PilotBook pilots;
    const auto wk = selection::make_wk_metric(32, 16);
    const auto enc = selection::siss_encode(s, book, pilots, sc, wk);
    const auto dec = selection::siss_decode(enc.symbols, book, pilots, sc);
    return dec.index == enc.index && dec.payload == s;
}

bool csv_roundtrip() {
    std::vector<ResultRow> rows{{"ESS", "NLI", 1.5, 1, 9.1234567890123, 5.5, 0.01, 3e-7, 0.0}};
    return parse_csv(format_csv(rows)) == rows;
}

bool config_roundtrip() {
    const auto cfg = desk_preset();
    return format_config(parse_config(format_config(cfg), ExperimentConfig{})) ==
           format_config(cfg);
}

}  // namespace

int run_selftest(std::ostream& os) {
    const std::vector<Check> checks = {
        {"ess exhaustive roundtrip N=6", ess_roundtrip},
        {"mb entropy fit", mb_entropy},
        {"pas map/demap", pas_roundtrip},
        {"rrc back-to-back", back_to_back},
        {"spm phase", spm_phase},
        {"noiseless air = 12 bits/4D", noiseless_air},
        {"siss roundtrip", selection_roundtrip},
        {"csv roundtrip", csv_roundtrip},
        {"config roundtrip", config_roundtrip},
    };
    int failures = 0;
    for (const auto& [name, fn] : checks) {
        bool ok = false;
        std::string err;
        try {
            ok = fn();
        } catch (const std::exception& e) {
            err = e.what();
        }
        os << (ok ? "ok   " : "FAIL ") << name;
        if (!err.empty()) {
            os << " (" << err << ")";
        }
        os << '\n';
        failures += ok ? 0 : 1;
    }
    return failures;
}

}  // namespace seqsel::harness
