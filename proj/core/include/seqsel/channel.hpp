#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "seqsel/rng.hpp"
#include "seqsel/types.hpp"

namespace seqsel::channel {

inline constexpr double kManakovFactor = 8.0 / 9.0;
inline constexpr double kPlanck = 6.62607015e-34;  // J s

struct FiberParams {
    double beta2_ps2_per_km = -21.7;
    double gamma_per_w_km = 1.27;
    double alpha_db_per_km = 0.2;
    double span_length_km = 100.0;
    std::size_t n_spans = 30;

    /// Field power attenuation coefficient in 1/km.
    double alpha_per_km() const;
    double span_loss_db() const { return alpha_db_per_km * span_length_km; }
    double total_dispersion_ps2() const {
        return beta2_ps2_per_km * span_length_km * static_cast<double>(n_spans);
    }
    void validate() const;
};

struct WdmConfig {
    std::size_t n_channels = 5;
    double symbol_rate_gbd = 46.5;
    double spacing_ghz = 50.0;
    double rolloff = 0.05;
    std::size_t sps = 16;
    double launch_power_dbm = 0.0;  // per channel, both polarizations

    double sample_rate_ghz() const { return static_cast<double>(sps) * symbol_rate_gbd; }
    double launch_power_w() const;
    std::size_t center_channel() const { return n_channels / 2; }
    void validate() const;
};

struct AmplifierParams {
    double noise_figure_db = 5.0;
    double center_frequency_thz = 193.41;
    bool noiseless = false;

    void validate() const;
};

enum class StepMode { fixed, adaptive };

struct StepConfig {
    StepMode mode = StepMode::adaptive;
    std::size_t steps_per_span = 1000;  // fixed mode
    double max_nonlinear_phase = 0.05;  // fixed mode: sanity bound [rad]
    double target_nonlinear_phase = 0.005;  // adaptive mode: per-step bound [rad]
    double max_step_km = 1.0;  // adaptive mode cap
};

struct FieldWaveform {
    std::vector<Complex> x;
    std::vector<Complex> y;
    double sample_rate_ghz = 0.0;

    std::size_t size() const { return x.size(); }
    /// Mean total power over both polarizations (W).
    double mean_power() const;
    void validate() const;
};

double dbm_to_w(double dbm);
double w_to_dbm(double w);

/// Raised-cosine spectrum (0..1) at frequency f for symbol rate rs (same units).
double raised_cosine(double f, double rs, double rolloff);
/// Closed-form root-raised-cosine magnitude, sqrt(raised_cosine).
double rrc_response(double f, double rs, double rolloff);

/// Applies the pulse-shaping filter sqrt(sps * RC(f)) to a cyclic sample
/// buffer at `sps` samples per symbol. The same filter is the matched filter.
void rrc_filter(std::span<Complex> samples, std::size_t sps, double rolloff);

/// Amplitude factor mapping constellation units to a waveform of the given
/// mean power, for mean 4D symbol energy `symbol_energy`.
double tx_amplitude_scale(double power_w, std::size_t sps, double symbol_energy);

/// Upsamples and pulse-shapes a block (cyclically) and scales it so that a
/// block of mean 4D energy `symbol_energy` has the configured launch power.
/// With symbol_energy <= 0 the block's own mean energy is used.
FieldWaveform rrc_modulate(std::span<const Symbol4D> symbols, const WdmConfig& wdm,
                           double symbol_energy = 0.0);

/// Carrier offset of channel k, rounded onto the FFT grid of an M-sample block.
double channel_offset_ghz(const WdmConfig& wdm, std::size_t channel, std::size_t samples);

FieldWaveform wdm_mux(std::span<const FieldWaveform> channels, const WdmConfig& wdm);
/// Frequency shift to baseband and brick-wall filter of width `spacing`.
FieldWaveform wdm_demux(const FieldWaveform& field, std::size_t channel, const WdmConfig& wdm);

/// All-pass dispersion exp(i * d/2 * w^2) for accumulated dispersion d (ps^2).
void apply_dispersion(FieldWaveform& field, double dispersion_ps2);

struct SpanStats {
    std::size_t steps = 0;
    double max_step_phase = 0.0;
};

/// Symmetric split-step integration of the Manakov equation over one span.
FieldWaveform ssfm_span(FieldWaveform field, const FiberParams& fiber, const StepConfig& steps,
                        SpanStats* stats = nullptr);

/// Lumped amplifier: sqrt(G) gain plus, unless noiseless, circular Gaussian
/// ASE of variance (G-1) h nu n_sp * sample_rate per polarization and sample.
FieldWaveform edfa(FieldWaveform field, double gain_db, const AmplifierParams& amp,
                   RngStream& rng);
double ase_variance(double gain_db, const AmplifierParams& amp, double sample_rate_ghz);

/// n_spans x (span, amplifier). ASE of span s is drawn from the stream
/// (noise_seed, ase, s).
FieldWaveform propagate_link(FieldWaveform field, const FiberParams& fiber,
                             const AmplifierParams& amp, const StepConfig& steps,
                             std::uint64_t noise_seed);

/// Debug dump: 32-byte little-endian header ("SQWF", version, sample rate,
/// length, polarizations) followed by complex64 samples, x then y.
void write_waveform(const std::filesystem::path& path, const FieldWaveform& field);
FieldWaveform read_waveform(const std::filesystem::path& path);

}  // namespace seqsel::channel
