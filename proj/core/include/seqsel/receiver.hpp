#pragma once

#include <span>
#include <vector>

#include "seqsel/channel.hpp"
#include "seqsel/shaping.hpp"
#include "seqsel/types.hpp"

namespace seqsel::receiver {

struct RxChain {
    double cdc_total_dispersion_ps2 = 0.0;  // accumulated link dispersion to undo
    double rolloff = 0.05;
    std::size_t sps = 16;
    double tx_scale = 1.0;  // waveform amplitude per constellation unit
};

/// Undoes `rx.cdc_total_dispersion_ps2` of accumulated dispersion.
channel::FieldWaveform cdc(channel::FieldWaveform field, const RxChain& rx);

/// Matched filter, symbol-time decimation, and removal of the transmit
/// scaling: the noiseless back-to-back chain returns the transmitted symbols.
Symbol4DSequence matched_filter_sample(const channel::FieldWaveform& field, const RxChain& rx);

/// Data-aided common phase per polarization, theta = arg sum(y conj(x)).
struct PhaseEstimate {
    double x = 0.0;
    double y = 0.0;
};
PhaseEstimate estimate_mean_phase(std::span<const Symbol4D> received,
                                  std::span<const Symbol4D> reference);
Symbol4DSequence mean_phase_comp(std::span<const Symbol4D> received,
                                 std::span<const Symbol4D> reference);

struct AirResult {
    double air_bits_per_4d = 0.0;
    double noise_variance_est = 0.0;  // per complex (2D) sample
    std::size_t n_symbols = 0;
    double ci95 = 0.0;
    double entropy_bits_per_4d = 0.0;
};

inline constexpr std::size_t kMinAirSymbols = 1000;

/// Bit-metric (BMD) achievable rate under a circular Gaussian auxiliary
/// channel fitted to the data. `amplitude_priors` are per-rail amplitude
/// probabilities; signs are uniform and rails independent.
AirResult air_bitwise(std::span<const Symbol4D> tx, std::span<const Symbol4D> rx,
                      const shaping::AmplitudeAlphabet& alphabet,
                      std::span<const double> amplitude_priors);

/// Symbol-metric rate under the same auxiliary channel (upper reference for
/// the bit-metric rate).
AirResult air_symbolwise(std::span<const Symbol4D> tx, std::span<const Symbol4D> rx,
                         const shaping::AmplitudeAlphabet& alphabet,
                         std::span<const double> amplitude_priors);

/// SE = max(0, air - overhead) * Rs / spacing * slot_factor.
double se_from_air(double air_bits_per_4d, const channel::WdmConfig& wdm,
                   double overhead_bits_per_4d, double slot_factor = 1.0);

}  // namespace seqsel::receiver
