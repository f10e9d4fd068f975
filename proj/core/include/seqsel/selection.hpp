#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "seqsel/channel.hpp"
#include "seqsel/receiver.hpp"
#include "seqsel/types.hpp"

namespace seqsel::selection {

enum class Scheme { bsss, siss };
enum class MetricKind { nli, wk };

struct SelectionConfig {
    Scheme scheme = Scheme::bsss;
    std::size_t n_t = 1;
    MetricKind metric = MetricKind::nli;
    std::size_t n = 256;  // payload 4D symbols per selection block

    /// ceil(log2 n_t)
    std::size_t pilot_bits() const;
    /// ceil(log2(n_t) / 4); zero for n_t = 1.
    std::size_t pilot_symbols() const;
    void validate() const;
};

/// Scrambling masks t_1..t_{n_t-1}; mask 0 is the implicit all-zero mask.
/// Mask i depends only on (seed, i), so the book for n_t is a prefix of the
/// book for any larger n_t.
struct ScramblerBook {
    std::vector<Bits> masks;
    std::uint64_t seed = 0;
};

/// Interleavers perm_1..perm_{n_t-1} over the payload positions; index 0 is
/// the identity. Candidate i carries out[j] = in[perm[j]].
struct PermutationBook {
    std::vector<std::vector<std::uint32_t>> perms;
    std::uint64_t seed = 0;
};

/// 16 dual-polarization pilots carved from the outer QAM corners. Pilot p
/// puts bits (3,2) of p on the x corner and bits (1,0) on the y corner.
class PilotBook {
public:
    explicit PilotBook(double corner_level = 7.0);

    const std::array<Symbol4D, 16>& points() const { return points_; }
    const Symbol4D& point(std::size_t label) const { return points_.at(label); }
    /// Minimum-distance detection over the 16 points.
    std::size_t detect(const Symbol4D& received) const;
    double energy() const { return points_[0].energy(); }
    double min_distance() const;

private:
    std::array<Symbol4D, 16> points_;
};

ScramblerBook generate_scrambler_book(std::uint64_t seed, std::size_t n_t,
                                      std::size_t mask_length);
PermutationBook generate_permutation_book(std::uint64_t seed, std::size_t n_t, std::size_t n);

/// Pilot symbols identifying candidate `index`, 4 bits per symbol, most
/// significant group first.
Symbol4DSequence pilot_symbols(std::size_t index, const SelectionConfig& cfg,
                               const PilotBook& pilots);

/// Cost of a candidate block whose payload starts at `payload_offset`
/// (preceding symbols are pilots). Lower is better.
using MetricFn = std::function<double(std::span<const Symbol4D> block, std::size_t payload_offset)>;
/// Maps a full DM input bit block (pilots included) to payload symbols.
using DmChain = std::function<Symbol4DSequence(const Bits& bits)>;

struct SelectionResult {
    Symbol4DSequence symbols;  // transmitted block (SISS: pilots first)
    std::size_t index = 0;
    std::vector<double> costs;  // per candidate, index order
};

/// Index of the smallest cost; ties resolve to the lowest index.
std::size_t argmin_cost(std::span<const double> costs);

/// Candidate i feeds binary(i) || (t_i xor b) into the DM chain.
SelectionResult bsss_encode(const Bits& info_bits, const ScramblerBook& book,
                            const SelectionConfig& cfg, const DmChain& dm_chain,
                            const MetricFn& metric);
/// Bit block fed to the DM chain for candidate `index`.
Bits bsss_candidate_bits(const Bits& info_bits, const ScramblerBook& book,
                         const SelectionConfig& cfg, std::size_t index);
Bits bsss_decode(const Bits& received_bits, const ScramblerBook& book, const SelectionConfig& cfg);

SelectionResult siss_encode(std::span<const Symbol4D> symbols, const PermutationBook& book,
                            const PilotBook& pilots, const SelectionConfig& cfg,
                            const MetricFn& metric);
Symbol4DSequence siss_candidate(std::span<const Symbol4D> symbols, const PermutationBook& book,
                                const PilotBook& pilots, const SelectionConfig& cfg,
                                std::size_t index);

struct SissDecoded {
    Symbol4DSequence payload;  // deinterleaved
    std::size_t index = 0;
};
/// Detects the pilot index and undoes the interleaver. Throws DecodeError
/// when the detected index is not a valid candidate.
SissDecoded siss_decode(std::span<const Symbol4D> received, const PermutationBook& book,
                        const PilotBook& pilots, const SelectionConfig& cfg);
/// Pilot index from the first pilot_symbols() received symbols.
std::size_t detect_pilot_index(std::span<const Symbol4D> received, const PilotBook& pilots,
                               const SelectionConfig& cfg);

enum class WkAggregate { mean, max };

/// Windowed kurtosis of per-symbol energies e_k = |x_k|^2 + |y_k|^2:
/// kappa_w = mean(e^2) / mean(e)^2 over windows of `window` symbols taken
/// every `stride` symbols, aggregated over windows.
double wk_metric(std::span<const Symbol4D> symbols, std::size_t window, std::size_t stride,
                 WkAggregate aggregate = WkAggregate::mean);

struct NliMetricConfig {
    channel::FiberParams fiber;
    channel::WdmConfig wdm;  // single channel; launch power = power under test
    channel::StepConfig steps;
    double symbol_energy = 0.0;  // nominal mean 4D energy for power scaling
};

/// Squared Euclidean distance between the payload and its noiseless
/// single-channel emulated propagation after the receiver chain (CDC,
/// matched filter, sampling, mean-phase compensation).
double nli_metric(std::span<const Symbol4D> block, std::size_t payload_offset,
                  const NliMetricConfig& cfg);

MetricFn make_nli_metric(NliMetricConfig cfg);
MetricFn make_wk_metric(std::size_t window, std::size_t stride,
                        WkAggregate aggregate = WkAggregate::mean);

}  // namespace seqsel::selection
