#include "seqsel/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "seqsel/receiver.hpp"

namespace seqsel::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_selection(ShapingScheme s) {
    return s == ShapingScheme::ess_bsss || s == ShapingScheme::ess_siss;
}

selection::SelectionConfig selection_config(const ExperimentConfig& cfg, ShapingScheme scheme,
                                            std::size_t n_t) {
    selection::SelectionConfig sc;
    sc.scheme = scheme == ShapingScheme::ess_siss ? selection::Scheme::siss
                                                  : selection::Scheme::bsss;
    sc.n_t = n_t;
    sc.metric = cfg.metric;
    sc.n = cfg.block_symbols;
    return sc;
}

double mean_energy_4d(const shaping::AmplitudeAlphabet& alphabet, std::span<const double> probs) {
    double e = 0.0;
    for (std::size_t a = 0; a < alphabet.size(); ++a) {
        e += probs[a] * alphabet.levels()[a] * alphabet.levels()[a];
    }
    return 4.0 * e;
}

}  // namespace

std::string to_string(ShapingScheme s) {
    switch (s) {
        case ShapingScheme::mb:
            return "MB";
        case ShapingScheme::ess:
            return "ESS";
        case ShapingScheme::ess_bsss:
            return "ESS+BSSS";
        case ShapingScheme::ess_siss:
            return "ESS+SISS";
    }
    return "?";
}

ShapingScheme parse_scheme(const std::string& s) {
    for (auto v : {ShapingScheme::mb, ShapingScheme::ess, ShapingScheme::ess_bsss,
                   ShapingScheme::ess_siss}) {
        if (to_string(v) == s) {
            return v;
        }
    }
    throw ConfigError("unknown shaping scheme '" + s + "' (MB, ESS, ESS+BSSS, ESS+SISS)");
}

std::string to_string(selection::MetricKind m) {
    return m == selection::MetricKind::nli ? "NLI" : "WK";
}

selection::MetricKind parse_metric(const std::string& s) {
    if (s == "NLI") {
        return selection::MetricKind::nli;
    }
    if (s == "WK") {
        return selection::MetricKind::wk;
    }
    throw ConfigError("unknown metric '" + s + "' (NLI, WK)");
}

std::size_t ExperimentConfig::dm_blocks() const {
    return 4 * block_symbols / shaping.blocklength;
}

void ExperimentConfig::validate() const {
    shaping.validate();
    fiber.validate();
    wdm.validate();
    amp.validate();
    if (block_symbols < 1) {
        throw ConfigError("selection block must hold at least one 4D symbol");
    }
    if ((4 * block_symbols) % shaping.blocklength != 0) {
        throw ConfigError("4 x block_symbols must be a multiple of the DM blocklength");
    }
    if (n_blocks < 1) {
        throw ConfigError("n_blocks must be >= 1");
    }
    if (frame_blocks < 1) {
        throw ConfigError("frame_blocks must be >= 1");
    }
    if (metric_sps < 2) {
        throw ConfigError("metric oversampling must be >= 2");
    }
    if (wk_window < 1 || wk_stride < 1 || wk_stride > wk_window) {
        throw ConfigError("windowed kurtosis requires 1 <= stride <= window");
    }
    if (sweep.launch_power_dbm.empty() || sweep.n_t.empty() || sweep.schemes.empty()) {
        throw ConfigError("sweep lists must be nonempty");
    }
    for (auto nt : sweep.n_t) {
        if (nt < 1) {
            throw ConfigError("n_t values must be >= 1");
        }
    }
}

ExperimentConfig paper_preset() {
    ExperimentConfig cfg;
    cfg.fiber.n_spans = 30;
    cfg.wdm.n_channels = 5;
    cfg.wdm.sps = 16;
    cfg.block_symbols = 256;
    cfg.sweep.n_t = {256};
    cfg.sweep.launch_power_dbm = {-2, -1, 0, 1, 2, 3, 4};
    cfg.n_blocks = 200;
    return cfg;
}

ExperimentConfig desk_preset() {
    ExperimentConfig cfg;
    cfg.fiber.n_spans = 10;
    cfg.wdm.n_channels = 3;
    cfg.wdm.sps = 8;
    // The shorter link runs at a higher SNR; a higher rate keeps the optimum
    // away from the entropy ceiling.
    cfg.shaping.rate = 1.6;
    cfg.block_symbols = 64;
    cfg.sweep.n_t = {16};
    cfg.sweep.schemes = {ShapingScheme::mb, ShapingScheme::ess, ShapingScheme::ess_bsss};
    cfg.sweep.launch_power_dbm = {0, 1, 2, 3};
    cfg.n_blocks = 192;
    cfg.bound = {1.0 / 16.0, 1600};
    return cfg;
}

ExperimentConfig preset(const std::string& name) {
    if (name == "desk") {
        return desk_preset();
    }
    if (name == "paper") {
        return paper_preset();
    }
    throw ConfigError("unknown scale preset '" + name + "' (desk, paper)");
}

void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) {
                        error = std::current_exception();
                    }
                    next = count;
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

Experiment::Experiment(ExperimentConfig cfg) : cfg_(std::move(cfg)), pilots_(cfg_.shaping.alphabet.max_level()) {
    cfg_.validate();
    // MB carries the same information rate per amplitude as the plain ESS matcher.
    const double rate = static_cast<double>(cfg_.shaping.input_bits()) /
                        static_cast<double>(cfg_.shaping.blocklength);
    mb_ = shaping::mb_fit(rate, cfg_.shaping.alphabet);
}

const shaping::EssTrellis& Experiment::trellis(std::size_t k) {
    std::lock_guard lock(mutex_);
    auto it = trellises_.find(k);
    if (it == trellises_.end()) {
        shaping::ShapingConfig sc = cfg_.shaping;
        sc.rate = static_cast<double>(k) / static_cast<double>(sc.blocklength);
        it = trellises_.emplace(k, std::make_unique<shaping::EssTrellis>(
                                       shaping::ess_build_trellis(sc)))
                 .first;
    }
    return *it->second;
}

const Experiment::DmLayout& Experiment::dm_layout(ShapingScheme scheme, std::size_t n_t) {
    if (!is_selection(scheme) || scheme == ShapingScheme::ess_siss) {
        n_t = 1;
    }
    const auto key = std::make_pair(static_cast<int>(scheme == ShapingScheme::mb ? 0 : 1), n_t);
    {
        std::lock_guard lock(mutex_);
        auto it = layouts_.find(key);
        if (it != layouts_.end()) {
            return it->second;
        }
    }
    DmLayout layout;
    const std::size_t n4 = 4 * cfg_.block_symbols;
    if (scheme == ShapingScheme::mb) {
        layout.info_bits = n4;
        layout.marginal = mb_.probs;
    } else {
        const std::size_t blocks = cfg_.dm_blocks();
        const std::size_t base_k = cfg_.shaping.input_bits();
        selection::SelectionConfig sc;
        sc.n_t = n_t;
        layout.pilot_bits = scheme == ShapingScheme::ess_bsss ? sc.pilot_bits() : 0;
        // Pilot bits are absorbed by raising the DM input per block.
        layout.k = base_k + (layout.pilot_bits + blocks - 1) / blocks;
        if (layout.pilot_bits == 0) {
            layout.k = base_k;
        }
        if (layout.k > cfg_.shaping.blocklength * cfg_.shaping.alphabet.bits_per_amplitude()) {
            throw ConfigError("DM rate increase for pilot bits exceeds the alphabet capacity");
        }
        const auto& t = trellis(layout.k);
        layout.emax = t.emax();
        layout.info_bits = blocks * layout.k - layout.pilot_bits + n4;
        layout.marginal = shaping::ess_marginal(
            t, cfg_.marginal_blocks, derive_seed(cfg_.seed, StreamTag::marginal, layout.k));
    }
    std::lock_guard lock(mutex_);
    return layouts_.emplace(key, std::move(layout)).first->second;
}

const selection::ScramblerBook& Experiment::scrambler_book(std::size_t n_t) {
    const auto& layout = dm_layout(ShapingScheme::ess_bsss, n_t);
    std::lock_guard lock(mutex_);
    auto it = scramblers_.find(n_t);
    if (it == scramblers_.end()) {
        it = scramblers_
                 .emplace(n_t, selection::generate_scrambler_book(
                                   derive_seed(cfg_.seed, StreamTag::scrambler), n_t,
                                   layout.info_bits))
                 .first;
    }
    return it->second;
}

const selection::PermutationBook& Experiment::permutation_book(std::size_t n_t) {
    std::lock_guard lock(mutex_);
    auto it = permutations_.find(n_t);
    if (it == permutations_.end()) {
        it = permutations_
                 .emplace(n_t, selection::generate_permutation_book(
                                   derive_seed(cfg_.seed, StreamTag::permutation), n_t,
                                   cfg_.block_symbols))
                 .first;
    }
    return it->second;
}

Bits Experiment::info_bits(std::size_t channel, std::size_t block, std::size_t count) const {
    RngStream rng(cfg_.seed, StreamTag::data, channel, block);
    return rng.bits(count);
}

Symbol4DSequence Experiment::dm_chain(const Bits& bits, const DmLayout& layout) {
    const std::size_t blocks = cfg_.dm_blocks();
    const std::size_t n4 = 4 * cfg_.block_symbols;
    if (bits.size() != blocks * layout.k + n4) {
        throw ConfigError("DM chain: bit block length mismatch");
    }
    const auto& t = trellis(layout.k);
    AmplitudeSequence amps;
    amps.reserve(n4);
    for (std::size_t b = 0; b < blocks; ++b) {
        const auto chunk = std::span<const std::uint8_t>(bits).subspan(b * layout.k, layout.k);
        const auto a = shaping::ess_encode(chunk, t);
        amps.insert(amps.end(), a.begin(), a.end());
    }
    const auto signs = std::span<const std::uint8_t>(bits).subspan(blocks * layout.k);
    return shaping::pas_map(amps, signs);
}

double Experiment::nominal_energy(ShapingScheme scheme, std::size_t n_t) {
    const auto& layout = dm_layout(scheme, n_t);
    const double payload = mean_energy_4d(cfg_.shaping.alphabet, layout.marginal);
    if (scheme != ShapingScheme::ess_siss) {
        return payload;
    }
    const auto sc = selection_config(cfg_, scheme, n_t);
    const double n = static_cast<double>(cfg_.block_symbols);
    const double p = static_cast<double>(sc.pilot_symbols());
    return (n * payload + p * pilots_.energy()) / (n + p);
}

selection::MetricFn Experiment::metric_fn(ShapingScheme scheme, std::size_t n_t,
                                          double power_dbm, selection::MetricKind kind) {
    if (kind == selection::MetricKind::wk) {
        return selection::make_wk_metric(cfg_.wk_window, cfg_.wk_stride, cfg_.wk_aggregate);
    }
    selection::NliMetricConfig mc;
    mc.fiber = cfg_.fiber;
    mc.wdm = cfg_.wdm;
    mc.wdm.n_channels = 1;
    mc.wdm.sps = cfg_.metric_sps;
    mc.wdm.launch_power_dbm = power_dbm;
    mc.steps = cfg_.steps;
    mc.symbol_energy = nominal_energy(scheme, n_t);
    return selection::make_nli_metric(std::move(mc));
}

Experiment::TxBlock Experiment::make_tx_block(ShapingScheme scheme, std::size_t n_t,
                                              double power_dbm, std::size_t channel,
                                              std::size_t block, bool score) {
    TxBlock out;
    const auto& layout = dm_layout(scheme, n_t);
    const bool selecting = is_selection(scheme) && n_t > 1;
    selection::MetricFn metric;
    if (score || selecting) {
        metric = metric_fn(scheme, n_t, power_dbm, cfg_.metric);
    }
    const auto sc = selection_config(cfg_, scheme, n_t);
    switch (scheme) {
        case ShapingScheme::mb: {
            RngStream rng(cfg_.seed, StreamTag::mb_amplitudes, channel, block);
            const auto amps = shaping::mb_sample(mb_, cfg_.shaping.alphabet, rng,
                                                 4 * cfg_.block_symbols);
            out.symbols = shaping::pas_map(amps, info_bits(channel, block, layout.info_bits));
            break;
        }
        case ShapingScheme::ess:
            out.symbols = dm_chain(info_bits(channel, block, layout.info_bits), layout);
            break;
        case ShapingScheme::ess_bsss: {
            const auto& book = scrambler_book(n_t);
            auto chain = [&](const Bits& b) { return dm_chain(b, layout); };
            auto res = selection::bsss_encode(info_bits(channel, block, layout.info_bits), book,
                                              sc, chain, metric);
            out.symbols = std::move(res.symbols);
            out.chosen = res.index;
            out.metric = res.costs[res.index];
            return out;
        }
        case ShapingScheme::ess_siss: {
            const auto payload = dm_chain(info_bits(channel, block, layout.info_bits), layout);
            auto res = selection::siss_encode(payload, permutation_book(n_t), pilots_, sc, metric);
            out.symbols = std::move(res.symbols);
            out.pilot_symbols = sc.pilot_symbols();
            out.chosen = res.index;
            out.metric = res.costs[res.index];
            return out;
        }
    }
    if (score) {
        out.metric = metric(out.symbols, 0);
    }
    return out;
}

std::vector<Experiment::Received> Experiment::transmit_frame(
    const std::vector<std::vector<TxBlock>>& frame, double power_dbm, double nominal_energy,
    std::size_t frame_index, ShapingScheme scheme, std::size_t n_t) {
    channel::WdmConfig wdm = cfg_.wdm;
    wdm.launch_power_dbm = power_dbm;
    std::vector<channel::FieldWaveform> fields;
    fields.reserve(frame.size());
    for (const auto& blocks : frame) {
        Symbol4DSequence symbols;
        for (const auto& b : blocks) {
            symbols.insert(symbols.end(), b.symbols.begin(), b.symbols.end());
        }
        fields.push_back(channel::rrc_modulate(symbols, wdm, nominal_energy));
    }
    auto field = channel::wdm_mux(fields, wdm);
    field = channel::propagate_link(std::move(field), cfg_.fiber, cfg_.amp, cfg_.steps,
                                    derive_seed(cfg_.seed, StreamTag::ase, frame_index));
    const std::size_t center = wdm.center_channel();
    field = channel::wdm_demux(field, center, wdm);

    receiver::RxChain rx;
    rx.cdc_total_dispersion_ps2 = cfg_.fiber.total_dispersion_ps2();
    rx.rolloff = wdm.rolloff;
    rx.sps = wdm.sps;
    rx.tx_scale = channel::tx_amplitude_scale(wdm.launch_power_w(), wdm.sps, nominal_energy);
    const auto received = receiver::matched_filter_sample(receiver::cdc(std::move(field), rx), rx);

    const auto& blocks = frame[center];
    std::vector<Received> out(blocks.size());
    Symbol4DSequence tx_all;
    Symbol4DSequence rx_all;
    std::size_t offset = 0;
    for (std::size_t j = 0; j < blocks.size(); ++j) {
        const TxBlock& tx = blocks[j];
        const auto rx_block = std::span<const Symbol4D>(received).subspan(offset, tx.symbols.size());
        offset += tx.symbols.size();
        if (scheme == ShapingScheme::ess_siss) {
            const auto sc = selection_config(cfg_, scheme, n_t);
            if (selection::detect_pilot_index(rx_block, pilots_, sc) != tx.chosen) {
                out[j].discarded = true;
                continue;
            }
        }
        const auto tx_payload = std::span<const Symbol4D>(tx.symbols).subspan(tx.pilot_symbols);
        const auto rx_payload = rx_block.subspan(tx.pilot_symbols);
        out[j].tx.assign(tx_payload.begin(), tx_payload.end());
        out[j].rx.assign(rx_payload.begin(), rx_payload.end());
        tx_all.insert(tx_all.end(), tx_payload.begin(), tx_payload.end());
        rx_all.insert(rx_all.end(), rx_payload.begin(), rx_payload.end());
    }
    if (tx_all.empty()) {
        return out;
    }
    // One mean phase per frame and polarization, estimated over the kept payload.
    const auto phase = receiver::estimate_mean_phase(rx_all, tx_all);
    const Complex rot_x = std::polar(1.0, -phase.x);
    const Complex rot_y = std::polar(1.0, -phase.y);
    for (auto& r : out) {
        for (auto& v : r.rx) {
            v.x *= rot_x;
            v.y *= rot_y;
        }
    }
    return out;
}

template <class Make>
std::vector<Experiment::Received> Experiment::transmit_all(std::size_t blocks, double power_dbm,
                                                           double nominal_energy,
                                                           ShapingScheme scheme, std::size_t n_t,
                                                           Make make) {
    const std::size_t per = std::max<std::size_t>(1, cfg_.frame_blocks);
    const std::size_t frames = (blocks + per - 1) / per;
    const std::size_t channels = cfg_.wdm.n_channels;
    std::vector<Received> received(blocks);
    parallel_for(frames, cfg_.workers, [&](std::size_t f) {
        const std::size_t lo = f * per;
        const std::size_t hi = std::min(blocks, lo + per);
        std::vector<std::vector<TxBlock>> frame(channels);
        for (std::size_t c = 0; c < channels; ++c) {
            for (std::size_t b = lo; b < hi; ++b) {
                frame[c].push_back(make(c, b));
            }
        }
        auto rx = transmit_frame(frame, power_dbm, nominal_energy, f, scheme, n_t);
        std::move(rx.begin(), rx.end(), received.begin() + static_cast<std::ptrdiff_t>(lo));
    });
    return received;
}

ResultRow Experiment::evaluate(const std::string& scheme_name, ShapingScheme scheme,
                               std::size_t n_t, double power_dbm,
                               const std::vector<Received>& blocks, const DmLayout& layout,
                               double metric_mean, double penalty, PointInfo* info) {
    Symbol4DSequence tx;
    Symbol4DSequence rx;
    std::size_t discarded = 0;
    for (const auto& b : blocks) {
        if (b.discarded) {
            ++discarded;
            continue;
        }
        tx.insert(tx.end(), b.tx.begin(), b.tx.end());
        rx.insert(rx.end(), b.rx.begin(), b.rx.end());
    }
    const auto air = receiver::air_bitwise(tx, rx, cfg_.shaping.alphabet, layout.marginal);

    const double n = static_cast<double>(cfg_.block_symbols);
    double rate_info = 0.0;
    if (scheme == ShapingScheme::mb) {
        rate_info = air.entropy_bits_per_4d;
    } else {
        rate_info = (static_cast<double>(cfg_.dm_blocks() * layout.k) -
                     static_cast<double>(layout.pilot_bits)) / n + 4.0;
    }
    const double overhead = air.entropy_bits_per_4d - rate_info;
    double slot = 1.0;
    if (scheme == ShapingScheme::ess_siss) {
        const auto sc = selection_config(cfg_, scheme, n_t);
        slot = n / (n + static_cast<double>(sc.pilot_symbols()));
    }
    ResultRow row;
    row.scheme = scheme_name;
    row.metric = to_string(cfg_.metric);
    row.launch_power_dbm = power_dbm;
    row.n_t = n_t;
    row.air_bits_per_4d = air.air_bits_per_4d;
    row.se_bits_per_s_hz =
        receiver::se_from_air(air.air_bits_per_4d + penalty, cfg_.wdm, overhead, slot);
    row.ci95 = air.ci95;
    row.selected_metric_mean = metric_mean;
    if (info != nullptr) {
        info->discarded_blocks = discarded;
        info->rate_info_bits_per_4d = rate_info;
        info->entropy_bits_per_4d = air.entropy_bits_per_4d;
        info->overhead_bits_per_4d = overhead;
        info->slot_factor = slot;
        info->se_ci95 = air.ci95 * cfg_.wdm.symbol_rate_gbd / cfg_.wdm.spacing_ghz * slot;
    }
    return row;
}

ResultRow Experiment::run_point(ShapingScheme scheme, double power_dbm, std::size_t n_t,
                                PointInfo* info) {
    const auto start = std::chrono::steady_clock::now();
    PointInfo local;
    PointInfo& pi = info != nullptr ? *info : local;
    if (!is_selection(scheme)) {
        n_t = 1;
    }
    ResultRow row;
    try {
        const auto& layout = dm_layout(scheme, n_t);
        if (scheme == ShapingScheme::ess_bsss) {
            scrambler_book(n_t);
        } else if (scheme == ShapingScheme::ess_siss) {
            permutation_book(n_t);
        }
        const double energy = nominal_energy(scheme, n_t);
        const std::size_t center = cfg_.wdm.center_channel();
        std::vector<double> metrics(cfg_.n_blocks);
        const auto received = transmit_all(
            cfg_.n_blocks, power_dbm, energy, scheme, n_t, [&](std::size_t c, std::size_t b) {
                auto tx = make_tx_block(scheme, n_t, power_dbm, c, b, c == center);
                if (c == center) {
                    metrics[b] = tx.metric;
                }
                return tx;
            });
        const double metric_mean =
            std::accumulate(metrics.begin(), metrics.end(), 0.0) / static_cast<double>(metrics.size());
        row = evaluate(to_string(scheme), scheme, n_t, power_dbm, received, layout, metric_mean,
                       0.0, &pi);
    } catch (const std::exception& e) {
        row = ResultRow{to_string(scheme), to_string(cfg_.metric), power_dbm, n_t,
                        kNaN, kNaN, kNaN, kNaN, 0.0};
        pi.error = e.what();
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    row.wall_time_s = cfg_.record_wall_time ? wall : 0.0;
    return row;
}

std::vector<ResultRow> Experiment::sweep(std::vector<PointInfo>* infos) {
    struct Keyed {
        std::size_t scheme;
        ResultRow row;
        PointInfo info;
    };
    std::vector<Keyed> keyed;
    for (auto scheme : cfg_.sweep.schemes) {
        const std::vector<std::size_t> nts =
            is_selection(scheme) ? cfg_.sweep.n_t : std::vector<std::size_t>{1};
        for (double p : cfg_.sweep.launch_power_dbm) {
            for (auto nt : nts) {
                Keyed k{static_cast<std::size_t>(scheme), {}, {}};
                k.row = run_point(scheme, p, nt, &k.info);
                keyed.push_back(std::move(k));
            }
        }
    }
    std::stable_sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
        if (a.scheme != b.scheme) {
            return a.scheme < b.scheme;
        }
        if (a.row.launch_power_dbm != b.row.launch_power_dbm) {
            return a.row.launch_power_dbm < b.row.launch_power_dbm;
        }
        return a.row.n_t < b.row.n_t;
    });
    std::vector<ResultRow> rows;
    for (auto& k : keyed) {
        rows.push_back(std::move(k.row));
        if (infos != nullptr) {
            infos->push_back(std::move(k.info));
        }
    }
    return rows;
}

ResultRow Experiment::ss_bound_estimate(double eta, std::size_t m_total, double power_dbm,
                                        PointInfo* info) {
    if (!(eta > 0.0) || eta > 1.0) {
        throw ConfigError("acceptance rate must lie in (0, 1]");
    }
    const double kept_real = eta * static_cast<double>(m_total);
    if (kept_real < 30.0 - 1e-9) {
        throw ConfigError("insufficient kept sample: eta * m_total must be >= 30");
    }
    const auto start = std::chrono::steady_clock::now();
    const std::size_t kept = std::min<std::size_t>(
        m_total, static_cast<std::size_t>(std::ceil(kept_real - 1e-9)));
    const ShapingScheme scheme = ShapingScheme::ess;
    const auto& layout = dm_layout(scheme, 1);
    const double energy = nominal_energy(scheme, 1);
    const std::size_t channels = cfg_.wdm.n_channels;
    const std::size_t center = cfg_.wdm.center_channel();

    // Score every candidate block of every channel with the NLI metric.
    std::vector<std::vector<double>> scores(channels, std::vector<double>(m_total));
    const auto metric = metric_fn(scheme, 1, power_dbm, selection::MetricKind::nli);
    parallel_for(channels * m_total, cfg_.workers, [&](std::size_t job) {
        const std::size_t c = job / m_total;
        const std::size_t j = job % m_total;
        const auto bits = info_bits(c, j, layout.info_bits);
        const auto symbols = dm_chain(bits, layout);
        scores[c][j] = metric(symbols, 0);
    });
    std::vector<std::vector<std::size_t>> chosen(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        std::vector<std::size_t> idx(m_total);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return scores[c][a] < scores[c][b];
        });
        idx.resize(kept);
        std::sort(idx.begin(), idx.end());
        chosen[c] = std::move(idx);
    }

    const auto received =
        transmit_all(kept, power_dbm, energy, scheme, 1, [&](std::size_t c, std::size_t j) {
            TxBlock tx;
            tx.symbols = dm_chain(info_bits(c, chosen[c][j], layout.info_bits), layout);
            return tx;
        });
    double metric_mean = 0.0;
    for (auto j : chosen[center]) {
        metric_mean += scores[center][j];
    }
    metric_mean /= static_cast<double>(kept);
    const double penalty = std::log2(eta) / static_cast<double>(cfg_.block_symbols);
    ResultRow row = evaluate("SS-bound", scheme, static_cast<std::size_t>(std::llround(1.0 / eta)),
                             power_dbm, received, layout, metric_mean, penalty, info);
    row.metric = to_string(selection::MetricKind::nli);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    row.wall_time_s = cfg_.record_wall_time ? wall : 0.0;
    return row;
}

std::map<std::string, std::string> Experiment::resolved_defaults() {
    std::map<std::string, std::string> out;
    auto put = [&](const std::string& k, auto v) {
        std::ostringstream os;
        os.precision(12);
        os << v;
        out[k] = os.str();
    };
    put("mb.lambda", mb_.lambda);
    put("mb.entropy_bits_per_amplitude", shaping::entropy_bits(mb_.probs));
    put("ess.k_base", cfg_.shaping.input_bits());
    put("ess.dm_blocks_per_selection_block", cfg_.dm_blocks());
    const auto& ess = dm_layout(ShapingScheme::ess, 1);
    put("ess.emax", ess.emax);
    put("ess.marginal_entropy_bits", shaping::entropy_bits(ess.marginal));
    for (auto nt : cfg_.sweep.n_t) {
        const auto& l = dm_layout(ShapingScheme::ess_bsss, nt);
        const std::string p = "bsss.n_t_" + std::to_string(nt);
        put(p + ".pilot_bits", l.pilot_bits);
        put(p + ".dm_input_bits", l.k);
        put(p + ".dm_rate", static_cast<double>(l.k) / static_cast<double>(cfg_.shaping.blocklength));
        put(p + ".emax", l.emax);
        selection::SelectionConfig sc;
        sc.n_t = nt;
        put("siss.n_t_" + std::to_string(nt) + ".pilot_symbols", sc.pilot_symbols());
    }
    put("pilot.corner_level", cfg_.shaping.alphabet.max_level());
    put("wk.window_symbols", cfg_.wk_window);
    put("wk.stride_symbols", cfg_.wk_stride);
    put("wk.aggregate", cfg_.wk_aggregate == selection::WkAggregate::mean ? "mean" : "max");
    put("nli.metric_sps", cfg_.metric_sps);
    put("nli.cost", "squared euclidean norm over payload");
    put("channel.block_processing", "cyclic, one selection block per simulation window");
    put("channel.manakov_factor", "8/9");
    put("channel.center_frequency_thz", cfg_.amp.center_frequency_thz);
    put("receiver.phase_compensation", "data-aided, per block and polarization");
    put("receiver.air_channel", "center");
    put("bound.rate_penalty", "log2(eta)/n bits per 4D (approximation)");
    return out;
}

std::vector<ResultRow> optimal_rows(const std::vector<ResultRow>& rows) {
    std::vector<ResultRow> out;
    for (const auto& r : rows) {
        auto it = std::find_if(out.begin(), out.end(), [&](const ResultRow& o) {
            return o.scheme == r.scheme && o.metric == r.metric && o.n_t == r.n_t;
        });
        if (it == out.end()) {
            out.push_back(r);
        } else if (r.se_bits_per_s_hz > it->se_bits_per_s_hz) {
            *it = r;
        }
    }
    return out;
}

std::string version() {
#ifdef SEQSEL_VERSION
    return SEQSEL_VERSION;
#else
    return "unknown";
#endif
}

}  // namespace seqsel::harness
