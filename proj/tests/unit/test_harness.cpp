#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "seqsel/harness.hpp"
#include "seqsel/receiver.hpp"

using namespace seqsel;
using namespace seqsel::harness;

namespace {

// Small enough to run in seconds: one channel, two spans, 16 blocks of 64.
ExperimentConfig tiny() {
    ExperimentConfig cfg = desk_preset();
    cfg.shaping.rate = 1.3;
    cfg.fiber.n_spans = 2;
    cfg.wdm.n_channels = 1;
    cfg.wdm.sps = 4;
    cfg.block_symbols = 64;
    cfg.metric_sps = 4;
    cfg.n_blocks = 16;
    cfg.frame_blocks = 4;
    cfg.marginal_blocks = 200;
    cfg.metric = selection::MetricKind::wk;
    cfg.wk_window = 16;
    cfg.wk_stride = 8;
    cfg.sweep.launch_power_dbm = {2.0};
    cfg.sweep.n_t = {4};
    return cfg;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("scheme and metric names") {
    for (auto s : {ShapingScheme::mb, ShapingScheme::ess, ShapingScheme::ess_bsss,
                   ShapingScheme::ess_siss}) {
        CHECK(parse_scheme(to_string(s)) == s);
    }
    CHECK(to_string(ShapingScheme::ess_bsss) == "ESS+BSSS");
    CHECK(parse_metric("WK") == selection::MetricKind::wk);
    CHECK_THROWS_AS(parse_scheme("QAM"), ConfigError);
    CHECK_THROWS_AS(parse_metric("nli"), ConfigError);
}

TEST_CASE("presets") {
    const auto paper = preset("paper");
    CHECK(paper.fiber.n_spans == 30);
    CHECK(paper.wdm.n_channels == 5);
    CHECK(paper.block_symbols == 256);
    CHECK(paper.dm_blocks() == 4);
    CHECK(paper.sweep.n_t == std::vector<std::size_t>{256});
    CHECK(paper.sweep.launch_power_dbm.size() == 7);
    CHECK(paper.n_blocks == 200);
    CHECK(paper.bound.eta == 1e-3);
    const auto desk = preset("desk");
    CHECK(desk.fiber.n_spans == 10);
    CHECK(desk.wdm.n_channels == 3);
    CHECK(desk.block_symbols == 64);
    CHECK(desk.sweep.n_t == std::vector<std::size_t>{16});
    CHECK(desk.n_blocks >= 100);
    CHECK(desk.n_blocks % desk.frame_blocks == 0);
    CHECK(desk.shaping.rate == 1.6);
    CHECK_NOTHROW(desk.validate());
    CHECK_NOTHROW(paper.validate());
    CHECK_THROWS_AS(preset("huge"), ConfigError);
}

TEST_CASE("config file") {
    const std::string text =
        "[fiber]\n"
        "span_length_km = 80\n"
        "n_spans = 4\n"
        "[sweep]\n"
        "launch_power_dbm = -1, 0.5, 2\n"
        "n_t = 1, 2, 4\n"
        "schemes = ESS, ESS+SISS\n"
        "[run]\n"
        "seed = 12345678901234\n";
    const auto cfg = parse_config(text, desk_preset());
    CHECK(cfg.fiber.span_length_km == 80.0);
    CHECK(cfg.fiber.n_spans == 4);
    CHECK(cfg.sweep.launch_power_dbm == std::vector<double>{-1.0, 0.5, 2.0});
    CHECK(cfg.sweep.n_t == std::vector<std::size_t>{1, 2, 4});
    CHECK(cfg.sweep.schemes ==
          std::vector<ShapingScheme>{ShapingScheme::ess, ShapingScheme::ess_siss});
    CHECK(cfg.seed == 12345678901234ULL);
    CHECK(cfg.wdm.n_channels == 3);  // untouched preset value

    CHECK(format_config(parse_config(format_config(cfg), ExperimentConfig{})) ==
          format_config(cfg));
    CHECK_THROWS_AS(parse_config("[fiber]\nspan_length = 80\n", {}), ConfigError);
    CHECK_THROWS_AS(parse_config("[fiber]\nn_spans = many\n", {}), ConfigError);
    CHECK_THROWS_AS(parse_config("[run]\nn_blocks = 0\n", {}), ConfigError);
    CHECK_THROWS_AS(parse_config("[wdm]\nn_channels = 4\n", {}), ConfigError);
    CHECK_THROWS_AS(parse_config("[sweep]\nschemes = PCS\n", {}), ConfigError);
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("csv contract") {
    CHECK(std::string(kCsvHeader) ==
          "scheme,metric,power_dbm,n_t,air_bits_4d,se_bits_s_hz,ci95,sel_metric_mean,wall_s");
    const std::vector<ResultRow> rows{
        {"ESS+BSSS", "NLI", -1.5, 16, 9.123456789012345, 8.4, 0.0123, 1.0 / 3.0, 0.0},
        {"MB", "WK", 4.0, 1, 0.1, 0.0, 1e-300, 12345.678, 1.25},
    };
    const auto text = format_csv(rows);
    CHECK(text.rfind(std::string(kCsvHeader) + "\n", 0) == 0);
    CHECK(text.back() == '\n');
    CHECK(parse_csv(text) == rows);
    CHECK_THROWS(format_csv({}));
    const auto path = std::filesystem::temp_directory_path() / "seqsel_csv_test.csv";
    emit_csv(rows, path);
    CHECK(read_csv(path) == rows);
    CHECK(slurp(path) == text);
    std::filesystem::remove(path);
    CHECK_THROWS(parse_csv("scheme,metric\n"));
}

TEST_CASE("parallel_for covers every index and rethrows") {
    std::vector<int> hit(100, 0);
    parallel_for(100, 4, [&](std::size_t i) { hit[i] += 1; });
    CHECK(std::count(hit.begin(), hit.end(), 1) == 100);
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                        if (i == 7) {
                            throw NumericalError("boom");
                        }
                    }),
                    NumericalError);
}

TEST_CASE("data layout and rate accounting") {
    Experiment ex(tiny());
    const auto& ess = ex.dm_layout(ShapingScheme::ess, 1);
    CHECK(ess.k == 333);
    CHECK(ess.pilot_bits == 0);
    CHECK(ess.info_bits == 333 + 256);
    const auto& bsss = ex.dm_layout(ShapingScheme::ess_bsss, 16);
    CHECK(bsss.pilot_bits == 4);
    CHECK(bsss.k == 337);
    CHECK(bsss.info_bits == 337 - 4 + 256);  // same payload as plain ESS
    CHECK(&ex.dm_layout(ShapingScheme::ess_bsss, 1) == &ess);
    CHECK(&ex.dm_layout(ShapingScheme::ess_siss, 16) == &ess);
    CHECK(shaping::entropy_bits(ex.mb_distribution().probs) == doctest::Approx(333.0 / 256.0));
    // SISS nominal energy includes the pilot symbol.
    const double e = ex.nominal_energy(ShapingScheme::ess, 1);
    CHECK(ex.nominal_energy(ShapingScheme::ess_siss, 16) ==
          doctest::Approx((64.0 * e + 196.0) / 65.0));
}

TEST_CASE("transmitted blocks decode back to the information bits") {
    auto cfg = tiny();
    Experiment ex(cfg);
    for (auto scheme : {ShapingScheme::ess, ShapingScheme::ess_bsss, ShapingScheme::ess_siss}) {
        const std::size_t n_t = 4;
        const auto tx = ex.make_tx_block(scheme, n_t, 2.0, 0, 3, true);
        const auto& layout = ex.dm_layout(scheme, n_t);
        const auto info = ex.info_bits(0, 3, layout.info_bits);
        selection::SelectionConfig sc;
        sc.n_t = n_t;
        sc.n = cfg.block_symbols;
        sc.scheme = scheme == ShapingScheme::ess_siss ? selection::Scheme::siss
                                                      : selection::Scheme::bsss;
        Symbol4DSequence payload = tx.symbols;
        if (scheme == ShapingScheme::ess_siss) {
            payload = selection::siss_decode(tx.symbols, ex.permutation_book(n_t), ex.pilot_book(), sc)
                          .payload;
        }
        const auto [amps, signs] = shaping::pas_demap_hard(payload, cfg.shaping.alphabet);
        shaping::ShapingConfig shc = cfg.shaping;
        shc.rate = static_cast<double>(layout.k) / static_cast<double>(shc.blocklength);
        const auto trellis = shaping::ess_build_trellis(shc);
        Bits bits = shaping::ess_decode(amps, trellis);
        bits.insert(bits.end(), signs.begin(), signs.end());
        if (scheme == ShapingScheme::ess_bsss) {
            bits = selection::bsss_decode(bits, ex.scrambler_book(n_t), sc);
        }
        CHECK(bits == info);
    }
}

TEST_CASE("single-candidate selection is plain shaping") {
    Experiment ex(tiny());
    const auto ess = ex.run_point(ShapingScheme::ess, 2.0, 1);
    const auto bsss = ex.run_point(ShapingScheme::ess_bsss, 2.0, 1);
    const auto siss = ex.run_point(ShapingScheme::ess_siss, 2.0, 1);
    for (const auto* r : {&bsss, &siss}) {
        CHECK(r->air_bits_per_4d == ess.air_bits_per_4d);
        CHECK(r->se_bits_per_s_hz == ess.se_bits_per_s_hz);
        CHECK(r->ci95 == ess.ci95);
    }
}

TEST_CASE("full acceptance bound is plain shaping") {
    auto cfg = tiny();
    cfg.n_blocks = 32;
    cfg.metric = selection::MetricKind::nli;
    Experiment ex(cfg);
    const auto ess = ex.run_point(ShapingScheme::ess, 2.0, 1);
    const auto bound = ex.ss_bound_estimate(1.0, cfg.n_blocks, 2.0);
    CHECK(bound.scheme == "SS-bound");
    CHECK(bound.n_t == 1);
    CHECK(bound.air_bits_per_4d == ess.air_bits_per_4d);
    CHECK(bound.se_bits_per_s_hz == ess.se_bits_per_s_hz);
}

TEST_CASE("bound applies the acceptance-rate penalty") {
    auto cfg = tiny();
    cfg.metric = selection::MetricKind::nli;
    Experiment ex(cfg);
    Experiment::PointInfo info;
    const auto row = ex.ss_bound_estimate(1.0 / 4.0, 120, 2.0, &info);
    CHECK(row.n_t == 4);
    const double penalty = std::log2(0.25) / 64.0;
    CHECK(row.se_bits_per_s_hz ==
          doctest::Approx(receiver::se_from_air(row.air_bits_per_4d + penalty, cfg.wdm,
                                                info.overhead_bits_per_4d)));
    CHECK(std::log2(1.0 / 256.0) / 256.0 == -0.03125);
    CHECK_THROWS_AS(ex.ss_bound_estimate(0.0, 100, 2.0), ConfigError);
    CHECK_THROWS_AS(ex.ss_bound_estimate(1.5, 100, 2.0), ConfigError);
    CHECK_THROWS_AS(ex.ss_bound_estimate(0.01, 2999, 2.0), ConfigError);
}

TEST_CASE("sweep shape and ordering") {
    auto cfg = tiny();
    cfg.n_blocks = 16;
    cfg.frame_blocks = 4;
    cfg.sweep.schemes = {ShapingScheme::mb};
    cfg.sweep.launch_power_dbm = {3, -2, -1, 0, 1, 2, 4};
    const auto rows = Experiment(cfg).sweep();
    REQUIRE(rows.size() == 7);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i - 1].launch_power_dbm < rows[i].launch_power_dbm);
    }
    const auto best = optimal_rows(rows);
    REQUIRE(best.size() == 1);
    for (const auto& r : rows) {
        CHECK(best[0].se_bits_per_s_hz >= r.se_bits_per_s_hz);
    }

    cfg.sweep.schemes = {ShapingScheme::ess_bsss, ShapingScheme::ess};
    cfg.sweep.launch_power_dbm = {1.0};
    cfg.sweep.n_t = {16, 1, 2, 8, 4};
    const auto nt_rows = Experiment(cfg).sweep();
    REQUIRE(nt_rows.size() == 6);
    CHECK(nt_rows[0].scheme == "ESS");
    for (std::size_t i = 1; i < 6; ++i) {
        CHECK(nt_rows[i].scheme == "ESS+BSSS");
        CHECK(nt_rows[i].n_t == (1UL << (i - 1)));
    }
}

TEST_CASE("reported rate never exceeds the prior entropy") {
    auto cfg = tiny();
    cfg.amp.noiseless = true;
    cfg.fiber.gamma_per_w_km = 0.0;
    Experiment ex(cfg);
    for (auto s : {ShapingScheme::mb, ShapingScheme::ess}) {
        Experiment::PointInfo info;
        const auto row = ex.run_point(s, 0.0, 1, &info);
        CHECK(row.air_bits_per_4d <= info.entropy_bits_per_4d + 1e-9);
        CHECK(row.air_bits_per_4d == doctest::Approx(info.entropy_bits_per_4d).epsilon(1e-6));
    }
}

TEST_CASE("module errors become diagnostic rows") {
    auto cfg = tiny();
    cfg.steps.mode = channel::StepMode::fixed;
    cfg.steps.steps_per_span = 2;
    Experiment ex(cfg);
    Experiment::PointInfo info;
    const auto row = ex.run_point(ShapingScheme::ess, 8.0, 1, &info);
    CHECK(std::isnan(row.air_bits_per_4d));
    CHECK(std::isnan(row.se_bits_per_s_hz));
    CHECK(!info.error.empty());
    CHECK(parse_csv(format_csv({row})).size() == 1);
}

TEST_CASE("results do not depend on the worker count") {
    auto cfg = tiny();
    cfg.sweep.schemes = {ShapingScheme::mb, ShapingScheme::ess_bsss, ShapingScheme::ess_siss};
    cfg.workers = 1;
    const auto a = format_csv(Experiment(cfg).sweep());
    cfg.workers = 3;
    const auto b = format_csv(Experiment(cfg).sweep());
    CHECK(a == b);
    cfg.seed = 2;
    CHECK(format_csv(Experiment(cfg).sweep()) != a);
}

TEST_CASE("metadata sidecar") {
    auto cfg = tiny();
    Experiment ex(cfg);
    const auto rows = std::vector<ResultRow>{ex.run_point(ShapingScheme::ess, 2.0, 1)};
    const auto path = std::filesystem::temp_directory_path() / "seqsel_meta_test.json";
    write_metadata(path, ex, rows, "run", {"note"});
    const auto text = slurp(path);
    std::filesystem::remove(path);
    CHECK(text.find("\"config_hash_fnv1a64\"") != std::string::npos);
    CHECK(text.find("\"seed\": 1") != std::string::npos);
    CHECK(text.find("\"version\": \"" + version() + "\"") != std::string::npos);
    CHECK(text.find("ess.emax") != std::string::npos);
    CHECK(text.find("bsss.n_t_4.dm_input_bits") != std::string::npos);
    CHECK(text.find("approximation") != std::string::npos);
}

TEST_CASE("selftest passes") {
    std::ostringstream os;
    CHECK(run_selftest(os) == 0);
    CHECK(os.str().find("FAIL") == std::string::npos);
}
