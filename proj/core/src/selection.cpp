#include "seqsel/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "seqsel/rng.hpp"

namespace seqsel::selection {

namespace {

std::size_t ceil_log2(std::size_t v) {
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < v) {
        ++bits;
    }
    return bits;
}

}  // namespace

std::size_t SelectionConfig::pilot_bits() const { return ceil_log2(n_t); }

std::size_t SelectionConfig::pilot_symbols() const { return (pilot_bits() + 3) / 4; }

void SelectionConfig::validate() const {
    if (n_t < 1) {
        throw ConfigError("number of test sequences must be >= 1");
    }
    if (n < 1) {
        throw ConfigError("selection block must hold at least one symbol");
    }
    if (scheme == Scheme::siss && n > std::numeric_limits<std::uint32_t>::max()) {
        throw ConfigError("selection block too long for permutation tables");
    }
}

PilotBook::PilotBook(double corner_level) {
    const double a = corner_level;
    for (std::size_t p = 0; p < 16; ++p) {
        auto s = [&](unsigned bit) { return ((p >> bit) & 1U) ? -a : a; };
        points_[p] = {{s(3), s(2)}, {s(1), s(0)}};
    }
}

std::size_t PilotBook::detect(const Symbol4D& received) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < points_.size(); ++p) {
        const double d = std::norm(received.x - points_[p].x) + std::norm(received.y - points_[p].y);
        if (d < best_d) {
            best_d = d;
            best = p;
        }
    }
    return best;
}

double PilotBook::min_distance() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points_.size(); ++i) {
        for (std::size_t j = i + 1; j < points_.size(); ++j) {
            m = std::min(m, std::sqrt(std::norm(points_[i].x - points_[j].x) +
                                      std::norm(points_[i].y - points_[j].y)));
        }
    }
    return m;
}

ScramblerBook generate_scrambler_book(std::uint64_t seed, std::size_t n_t,
                                      std::size_t mask_length) {
    ScramblerBook book{{}, seed};
    const Bits zero(mask_length, 0);
    for (std::size_t i = 1; i < n_t; ++i) {
        for (std::uint64_t attempt = 0;; ++attempt) {
            RngStream rng(seed, StreamTag::scrambler, i, attempt);
            Bits mask = rng.bits(mask_length);
            const bool clash = mask == zero ||
                               std::find(book.masks.begin(), book.masks.end(), mask) !=
                                   book.masks.end();
            if (!clash || mask_length == 0) {
                book.masks.push_back(std::move(mask));
                break;
            }
        }
    }
    return book;
}

PermutationBook generate_permutation_book(std::uint64_t seed, std::size_t n_t, std::size_t n) {
    PermutationBook book{{}, seed};
    std::vector<std::uint32_t> identity(n);
    std::iota(identity.begin(), identity.end(), 0U);
    for (std::size_t i = 1; i < n_t; ++i) {
        for (std::uint64_t attempt = 0;; ++attempt) {
            RngStream rng(seed, StreamTag::permutation, i, attempt);
            auto perm = identity;
            for (std::size_t j = n; j > 1; --j) {
                std::swap(perm[j - 1], perm[rng.below(j)]);
            }
            const bool clash = perm == identity ||
                               std::find(book.perms.begin(), book.perms.end(), perm) !=
                                   book.perms.end();
            // Tiny blocks cannot host n_t distinct tables; accept repeats there.
            if (!clash || attempt >= 64) {
                book.perms.push_back(std::move(perm));
                break;
            }
        }
    }
    return book;
}

Symbol4DSequence pilot_symbols(std::size_t index, const SelectionConfig& cfg,
                               const PilotBook& pilots) {
    const std::size_t count = cfg.pilot_symbols();
    Symbol4DSequence out(count);
    for (std::size_t s = 0; s < count; ++s) {
        const std::size_t shift = 4 * (count - 1 - s);
        out[s] = pilots.point((index >> shift) & 0xFU);
    }
    return out;
}

std::size_t argmin_cost(std::span<const double> costs) {
    if (costs.empty()) {
        throw ConfigError("no candidates to select from");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < costs.size(); ++i) {
        if (costs[i] < costs[best]) {
            best = i;
        }
    }
    return best;
}

Bits bsss_candidate_bits(const Bits& info_bits, const ScramblerBook& book,
                         const SelectionConfig& cfg, std::size_t index) {
    const std::size_t p = cfg.pilot_bits();
    Bits out(p + info_bits.size());
    for (std::size_t b = 0; b < p; ++b) {
        out[b] = static_cast<std::uint8_t>((index >> (p - 1 - b)) & 1U);
    }
    if (index == 0) {
        std::copy(info_bits.begin(), info_bits.end(), out.begin() + static_cast<long>(p));
        return out;
    }
    const Bits& mask = book.masks.at(index - 1);
    if (mask.size() != info_bits.size()) {
        throw ConfigError("scrambler mask length does not match the information block");
    }
    for (std::size_t b = 0; b < info_bits.size(); ++b) {
        out[p + b] = info_bits[b] ^ mask[b];
    }
    return out;
}

SelectionResult bsss_encode(const Bits& info_bits, const ScramblerBook& book,
                            const SelectionConfig& cfg, const DmChain& dm_chain,
                            const MetricFn& metric) {
    cfg.validate();
    if (book.masks.size() + 1 < cfg.n_t) {
        throw ConfigError("scrambler book smaller than n_t - 1");
    }
    SelectionResult res;
    Symbol4DSequence best;
    if (cfg.n_t == 1) {
        res.symbols = dm_chain(bsss_candidate_bits(info_bits, book, cfg, 0));
        res.costs.push_back(metric ? metric(res.symbols, 0) : 0.0);
        return res;
    }
    for (std::size_t i = 0; i < cfg.n_t; ++i) {
        auto symbols = dm_chain(bsss_candidate_bits(info_bits, book, cfg, i));
        res.costs.push_back(metric(symbols, 0));
        if (i == 0 || res.costs[i] < res.costs[res.index]) {
            res.index = i;
            best = std::move(symbols);
        }
    }
    res.symbols = std::move(best);
    return res;
}

Bits bsss_decode(const Bits& received_bits, const ScramblerBook& book,
                 const SelectionConfig& cfg) {
    const std::size_t p = cfg.pilot_bits();
    if (received_bits.size() < p) {
        throw DecodeError("received block shorter than the pilot field");
    }
    std::size_t index = 0;
    for (std::size_t b = 0; b < p; ++b) {
        index = (index << 1) | received_bits[b];
    }
    if (index >= cfg.n_t) {
        throw DecodeError("pilot index exceeds the number of test sequences");
    }
    Bits out(received_bits.begin() + static_cast<long>(p), received_bits.end());
    if (index > 0) {
        const Bits& mask = book.masks.at(index - 1);
        if (mask.size() != out.size()) {
            throw DecodeError("scrambler mask length does not match the received block");
        }
        for (std::size_t b = 0; b < out.size(); ++b) {
            out[b] ^= mask[b];
        }
    }
    return out;
}

Symbol4DSequence siss_candidate(std::span<const Symbol4D> symbols, const PermutationBook& book,
                                const PilotBook& pilots, const SelectionConfig& cfg,
                                std::size_t index) {
    Symbol4DSequence out = pilot_symbols(index, cfg, pilots);
    out.reserve(out.size() + symbols.size());
    if (index == 0) {
        out.insert(out.end(), symbols.begin(), symbols.end());
        return out;
    }
    const auto& perm = book.perms.at(index - 1);
    if (perm.size() != symbols.size()) {
        throw ConfigError("permutation length does not match the payload");
    }
    for (auto src : perm) {
        out.push_back(symbols[src]);
    }
    return out;
}

SelectionResult siss_encode(std::span<const Symbol4D> symbols, const PermutationBook& book,
                            const PilotBook& pilots, const SelectionConfig& cfg,
                            const MetricFn& metric) {
    cfg.validate();
    if (book.perms.size() + 1 < cfg.n_t) {
        throw ConfigError("permutation book smaller than n_t - 1");
    }
    const std::size_t offset = cfg.pilot_symbols();
    SelectionResult res;
    if (cfg.n_t == 1) {
        res.symbols = siss_candidate(symbols, book, pilots, cfg, 0);
        res.costs.push_back(metric ? metric(res.symbols, offset) : 0.0);
        return res;
    }
    Symbol4DSequence best;
    for (std::size_t i = 0; i < cfg.n_t; ++i) {
        auto cand = siss_candidate(symbols, book, pilots, cfg, i);
        res.costs.push_back(metric(cand, offset));
        if (i == 0 || res.costs[i] < res.costs[res.index]) {
            res.index = i;
            best = std::move(cand);
        }
    }
    res.symbols = std::move(best);
    return res;
}

std::size_t detect_pilot_index(std::span<const Symbol4D> received, const PilotBook& pilots,
                               const SelectionConfig& cfg) {
    const std::size_t count = cfg.pilot_symbols();
    if (received.size() < count) {
        throw DecodeError("received block shorter than the pilot field");
    }
    std::size_t index = 0;
    for (std::size_t s = 0; s < count; ++s) {
        index = (index << 4) | pilots.detect(received[s]);
    }
    return index;
}

SissDecoded siss_decode(std::span<const Symbol4D> received, const PermutationBook& book,
                        const PilotBook& pilots, const SelectionConfig& cfg) {
    const std::size_t index = detect_pilot_index(received, pilots, cfg);
    if (index >= cfg.n_t) {
        throw DecodeError("detected pilot index exceeds the number of test sequences");
    }
    const auto payload = received.subspan(cfg.pilot_symbols());
    SissDecoded out{Symbol4DSequence(payload.begin(), payload.end()), index};
    if (index > 0) {
        const auto& perm = book.perms.at(index - 1);
        if (perm.size() != payload.size()) {
            throw DecodeError("permutation length does not match the received payload");
        }
        for (std::size_t j = 0; j < perm.size(); ++j) {
            out.payload[perm[j]] = payload[j];
        }
    }
    return out;
}

double wk_metric(std::span<const Symbol4D> symbols, std::size_t window, std::size_t stride,
                 WkAggregate aggregate) {
    const std::size_t n = symbols.size();
    if (window < 1 || window > n || stride < 1 || stride > window) {
        throw ConfigError("windowed kurtosis requires 1 <= stride <= window <= n");
    }
    std::vector<double> s1(n + 1, 0.0);
    std::vector<double> s2(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double e = symbols[k].energy();
        s1[k + 1] = s1[k] + e;
        s2[k + 1] = s2[k] + e * e;
    }
    const double w = static_cast<double>(window);
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t start = 0; start + window <= n; start += stride) {
        const double m1 = (s1[start + window] - s1[start]) / w;
        const double m2 = (s2[start + window] - s2[start]) / w;
        if (!(m1 > 0.0)) {
            throw NumericalError("windowed kurtosis undefined on an all-zero window");
        }
        const double kappa = m2 / (m1 * m1);
        acc = aggregate == WkAggregate::max ? std::max(acc, kappa) : acc + kappa;
        ++count;
    }
    return aggregate == WkAggregate::max ? acc : acc / static_cast<double>(count);
}

double nli_metric(std::span<const Symbol4D> block, std::size_t payload_offset,
                  const NliMetricConfig& cfg) {
    if (payload_offset >= block.size()) {
        throw ConfigError("NLI metric: empty payload");
    }
    channel::WdmConfig wdm = cfg.wdm;
    wdm.n_channels = 1;
    auto field = channel::rrc_modulate(block, wdm, cfg.symbol_energy);
    channel::AmplifierParams amp;
    amp.noiseless = true;
    field = channel::propagate_link(std::move(field), cfg.fiber, amp, cfg.steps, 0);

    receiver::RxChain rx;
    rx.cdc_total_dispersion_ps2 = cfg.fiber.total_dispersion_ps2();
    rx.rolloff = wdm.rolloff;
    rx.sps = wdm.sps;
    double es = cfg.symbol_energy;
    if (es <= 0.0) {
        es = 0.0;
        for (const auto& s : block) {
            es += s.energy();
        }
        es /= static_cast<double>(block.size());
    }
    rx.tx_scale = channel::tx_amplitude_scale(wdm.launch_power_w(), wdm.sps, es);
    const auto received = receiver::matched_filter_sample(receiver::cdc(std::move(field), rx), rx);

    const auto tx = block.subspan(payload_offset);
    const auto rx_payload = std::span<const Symbol4D>(received).subspan(payload_offset);
    const auto y = receiver::mean_phase_comp(rx_payload, tx);
    double cost = 0.0;
    for (std::size_t k = 0; k < tx.size(); ++k) {
        cost += std::norm(y[k].x - tx[k].x) + std::norm(y[k].y - tx[k].y);
    }
    return cost;
}

MetricFn make_nli_metric(NliMetricConfig cfg) {
    return [cfg = std::move(cfg)](std::span<const Symbol4D> block, std::size_t offset) {
        return nli_metric(block, offset, cfg);
    };
}

MetricFn make_wk_metric(std::size_t window, std::size_t stride, WkAggregate aggregate) {
    return [=](std::span<const Symbol4D> block, std::size_t offset) {
        const auto payload = block.subspan(offset);
        const std::size_t w = std::min(window, payload.size());
        return wk_metric(payload, w, std::min(stride, w), aggregate);
    };
}

}  // namespace seqsel::selection
