#include <benchmark/benchmark.h>

#include "seqsel/channel.hpp"
#include "seqsel/receiver.hpp"
#include "seqsel/selection.hpp"
#include "seqsel/shaping.hpp"

using namespace seqsel;

namespace {

Symbol4DSequence random_block(std::size_t n, std::uint64_t seed) {
    RngStream rng(seed, StreamTag::test);
    const shaping::AmplitudeAlphabet alphabet;
    AmplitudeSequence amps(4 * n);
    for (auto& a : amps) {
        a = alphabet.levels()[rng.below(4)];
    }
    return shaping::pas_map(amps, rng.bits(amps.size()));
}

void BM_EssEncode(benchmark::State& state) {
    shaping::ShapingConfig cfg;
    const auto t = shaping::ess_build_trellis(cfg);
    RngStream rng(1, StreamTag::test);
    const auto bits = rng.bits(cfg.input_bits());
    for (auto _ : state) {
        benchmark::DoNotOptimize(shaping::ess_encode(bits, t));
    }
}
BENCHMARK(BM_EssEncode);

void BM_EssDecode(benchmark::State& state) {
    shaping::ShapingConfig cfg;
    const auto t = shaping::ess_build_trellis(cfg);
    RngStream rng(1, StreamTag::test);
    const auto amps = shaping::ess_encode(rng.bits(cfg.input_bits()), t);
    for (auto _ : state) {
        benchmark::DoNotOptimize(shaping::ess_decode(amps, t));
    }
}
BENCHMARK(BM_EssDecode);

void BM_SsfmSpan(benchmark::State& state) {
    channel::WdmConfig wdm;
    wdm.n_channels = 1;
    wdm.sps = 4;
    wdm.launch_power_dbm = 2.0;
    const auto field = channel::rrc_modulate(random_block(state.range(0), 2), wdm);
    channel::FiberParams fiber;
    for (auto _ : state) {
        benchmark::DoNotOptimize(channel::ssfm_span(field, fiber, {}));
    }
}
BENCHMARK(BM_SsfmSpan)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_NliMetric(benchmark::State& state) {
    selection::NliMetricConfig mc;
    mc.fiber.n_spans = 10;
    mc.wdm.n_channels = 1;
    mc.wdm.sps = 4;
    mc.wdm.launch_power_dbm = 3.0;
    const auto block = random_block(64, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(selection::nli_metric(block, 0, mc));
    }
}
BENCHMARK(BM_NliMetric)->Unit(benchmark::kMillisecond);

void BM_WkMetric(benchmark::State& state) {
    const auto block = random_block(256, 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(selection::wk_metric(block, 128, 64));
    }
}
BENCHMARK(BM_WkMetric);

void BM_AirBitwise(benchmark::State& state) {
    const auto tx = random_block(state.range(0), 5);
    auto rx = tx;
    RngStream rng(6, StreamTag::test);
    for (auto& s : rx) {
        s.x += rng.complex_gaussian(0.5);
        s.y += rng.complex_gaussian(0.5);
    }
    const std::vector<double> uniform(4, 0.25);
    const shaping::AmplitudeAlphabet alphabet;
    for (auto _ : state) {
        benchmark::DoNotOptimize(receiver::air_bitwise(tx, rx, alphabet, uniform));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AirBitwise)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
