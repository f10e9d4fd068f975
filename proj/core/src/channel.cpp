#include "seqsel/channel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "seqsel/fft.hpp"

namespace seqsel::channel {

namespace {

constexpr double kPi = std::numbers::pi;

void require_finite(const std::vector<Complex>& v) {
    for (const auto& s : v) {
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) {
            throw NumericalError("non-finite field sample");
        }
    }
}

// Signed frequency of FFT bin i for an n-point transform at rate fs.
double bin_frequency(std::size_t i, std::size_t n, double fs) {
    const double si = i < (n + 1) / 2 ? static_cast<double>(i)
                                      : static_cast<double>(i) - static_cast<double>(n);
    return si * fs / static_cast<double>(n);
}

}  // namespace

double FiberParams::alpha_per_km() const { return alpha_db_per_km * std::log(10.0) / 10.0; }

void FiberParams::validate() const {
    if (!(span_length_km > 0.0)) {
        throw ConfigError("span length must be positive");
    }
    if (alpha_db_per_km < 0.0) {
        throw ConfigError("fiber attenuation must be nonnegative");
    }
}

double WdmConfig::launch_power_w() const { return dbm_to_w(launch_power_dbm); }

void WdmConfig::validate() const {
    if (n_channels < 1 || n_channels % 2 == 0) {
        throw ConfigError("number of WDM channels must be odd");
    }
    if (sps < 2) {
        throw ConfigError("at least 2 samples per symbol are required");
    }
    if (rolloff < 0.0 || rolloff > 1.0) {
        throw ConfigError("roll-off must lie in [0, 1]");
    }
    if (n_channels > 1 && spacing_ghz < symbol_rate_gbd * (1.0 + rolloff) - 1e-9) {
        throw ConfigError("channel spacing below the signal bandwidth");
    }
    if (sample_rate_ghz() < static_cast<double>(n_channels) * spacing_ghz - 1e-9) {
        throw ConfigError("sample rate too low for the WDM grid (aliasing)");
    }
}

void AmplifierParams::validate() const {
    if (!noiseless && noise_figure_db < 3.0) {
        throw ConfigError("EDFA noise figure below the 3 dB quantum limit");
    }
}

double FieldWaveform::mean_power() const {
    if (x.empty()) {
        return 0.0;
    }
    double p = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        p += std::norm(x[i]) + std::norm(y[i]);
    }
    return p / static_cast<double>(x.size());
}

void FieldWaveform::validate() const {
    if (x.size() != y.size()) {
        throw ConfigError("polarization sample counts differ");
    }
    require_finite(x);
    require_finite(y);
}

double dbm_to_w(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
double w_to_dbm(double w) { return 10.0 * std::log10(w / 1e-3); }

double raised_cosine(double f, double rs, double rolloff) {
    const double af = std::abs(f);
    const double f1 = (1.0 - rolloff) * rs / 2.0;
    const double f2 = (1.0 + rolloff) * rs / 2.0;
    if (af <= f1) {
        return 1.0;
    }
    if (af >= f2) {
        return 0.0;
    }
    return 0.5 * (1.0 + std::cos(kPi / (rolloff * rs) * (af - f1)));
}

double rrc_response(double f, double rs, double rolloff) {
    return std::sqrt(raised_cosine(f, rs, rolloff));
}

void rrc_filter(std::span<Complex> samples, std::size_t sps, double rolloff) {
    const std::size_t m = samples.size();
    fft_forward(samples);
    // Normalized units: symbol rate 1, sample rate sps.
    const double fs = static_cast<double>(sps);
    for (std::size_t i = 0; i < m; ++i) {
        const double rc = raised_cosine(bin_frequency(i, m, fs), 1.0, rolloff);
        samples[i] *= std::sqrt(fs * rc);
    }
    fft_inverse(samples);
}

double tx_amplitude_scale(double power_w, std::size_t sps, double symbol_energy) {
    if (!(symbol_energy > 0.0)) {
        throw NumericalError("symbol energy must be positive");
    }
    return std::sqrt(power_w * static_cast<double>(sps) / symbol_energy);
}

FieldWaveform rrc_modulate(std::span<const Symbol4D> symbols, const WdmConfig& wdm,
                           double symbol_energy) {
    if (wdm.sps < 2) {
        throw ConfigError("at least 2 samples per symbol are required");
    }
    const std::size_t m = symbols.size() * wdm.sps;
    FieldWaveform out{std::vector<Complex>(m), std::vector<Complex>(m), wdm.sample_rate_ghz()};
    if (symbols.empty()) {
        return out;
    }
    double es = symbol_energy;
    if (es <= 0.0) {
        es = 0.0;
        for (const auto& s : symbols) {
            es += s.energy();
        }
        es /= static_cast<double>(symbols.size());
    }
    for (std::size_t k = 0; k < symbols.size(); ++k) {
        out.x[k * wdm.sps] = symbols[k].x;
        out.y[k * wdm.sps] = symbols[k].y;
    }
    rrc_filter(out.x, wdm.sps, wdm.rolloff);
    rrc_filter(out.y, wdm.sps, wdm.rolloff);
    const double c = tx_amplitude_scale(wdm.launch_power_w(), wdm.sps, es);
    for (std::size_t i = 0; i < m; ++i) {
        out.x[i] *= c;
        out.y[i] *= c;
    }
    return out;
}

double channel_offset_ghz(const WdmConfig& wdm, std::size_t channel, std::size_t samples) {
    const double nominal = (static_cast<double>(channel) -
                            static_cast<double>(wdm.n_channels - 1) / 2.0) *
                           wdm.spacing_ghz;
    const double df = wdm.sample_rate_ghz() / static_cast<double>(samples);
    return std::round(nominal / df) * df;
}

namespace {

void frequency_shift(std::vector<Complex>& v, double offset_ghz, double fs_ghz) {
    const std::size_t m = v.size();
    // Offsets sit on the FFT grid, so the shift keeps the block cyclic.
    const double bins = std::round(offset_ghz / fs_ghz * static_cast<double>(m));
    const auto mm = static_cast<long long>(m);
    const auto b = static_cast<long long>(bins);
    for (std::size_t i = 0; i < m; ++i) {
        const long long phase_index = ((b * static_cast<long long>(i)) % mm + mm) % mm;
        const double phi = 2.0 * kPi * static_cast<double>(phase_index) / static_cast<double>(m);
        v[i] *= Complex(std::cos(phi), std::sin(phi));
    }
}

void check_grid(const WdmConfig& wdm, std::size_t samples) {
    wdm.validate();
    const double fs = wdm.sample_rate_ghz();
    const double half_bw = (1.0 + wdm.rolloff) * wdm.symbol_rate_gbd / 2.0;
    for (std::size_t k = 0; k < wdm.n_channels; ++k) {
        if (std::abs(channel_offset_ghz(wdm, k, samples)) + half_bw > fs / 2.0 + 1e-9) {
            throw ConfigError("WDM grid exceeds the simulation bandwidth (aliasing)");
        }
    }
}

}  // namespace

FieldWaveform wdm_mux(std::span<const FieldWaveform> channels, const WdmConfig& wdm) {
    if (channels.size() != wdm.n_channels) {
        throw ConfigError("wdm_mux: channel count mismatch");
    }
    const std::size_t m = channels.front().size();
    for (const auto& c : channels) {
        if (c.size() != m || c.sample_rate_ghz != channels.front().sample_rate_ghz) {
            throw ConfigError("wdm_mux: channels must share length and sample rate");
        }
    }
    if (wdm.n_channels == 1) {
        return channels.front();
    }
    check_grid(wdm, m);
    FieldWaveform out{std::vector<Complex>(m), std::vector<Complex>(m),
                      channels.front().sample_rate_ghz};
    for (std::size_t k = 0; k < channels.size(); ++k) {
        auto x = channels[k].x;
        auto y = channels[k].y;
        const double f = channel_offset_ghz(wdm, k, m);
        frequency_shift(x, f, out.sample_rate_ghz);
        frequency_shift(y, f, out.sample_rate_ghz);
        for (std::size_t i = 0; i < m; ++i) {
            out.x[i] += x[i];
            out.y[i] += y[i];
        }
    }
    return out;
}

FieldWaveform wdm_demux(const FieldWaveform& field, std::size_t channel, const WdmConfig& wdm) {
    if (channel >= wdm.n_channels) {
        throw ConfigError("wdm_demux: channel index out of range");
    }
    const std::size_t m = field.size();
    check_grid(wdm, m);
    FieldWaveform out = field;
    const double f = channel_offset_ghz(wdm, channel, m);
    frequency_shift(out.x, -f, field.sample_rate_ghz);
    frequency_shift(out.y, -f, field.sample_rate_ghz);
    if (wdm.n_channels == 1) {
        return out;
    }
    for (auto* pol : {&out.x, &out.y}) {
        fft_forward(*pol);
        for (std::size_t i = 0; i < m; ++i) {
            if (std::abs(bin_frequency(i, m, field.sample_rate_ghz)) > wdm.spacing_ghz / 2.0) {
                (*pol)[i] = 0.0;
            }
        }
        fft_inverse(*pol);
    }
    return out;
}

void apply_dispersion(FieldWaveform& field, double dispersion_ps2) {
    if (dispersion_ps2 == 0.0 || field.size() == 0) {
        return;
    }
    const double dt_ps = 1e3 / field.sample_rate_ghz;
    const auto w = angular_frequencies(field.size(), dt_ps);
    for (auto* pol : {&field.x, &field.y}) {
        fft_forward(*pol);
        for (std::size_t i = 0; i < w.size(); ++i) {
            (*pol)[i] *= std::polar(1.0, 0.5 * dispersion_ps2 * w[i] * w[i]);
        }
        fft_inverse(*pol);
    }
}

FieldWaveform ssfm_span(FieldWaveform field, const FiberParams& fiber, const StepConfig& steps,
                        SpanStats* stats) {
    fiber.validate();
    field.validate();
    const std::size_t m = field.size();
    SpanStats local;
    if (m == 0) {
        return field;
    }
    const double alpha = fiber.alpha_per_km();
    const double gamma_eff = kManakovFactor * fiber.gamma_per_w_km;
    const double length = fiber.span_length_km;
    const double dt_ps = 1e3 / field.sample_rate_ghz;
    const auto w = angular_frequencies(m, dt_ps);

    auto peak_power = [&]() {
        double p = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            p = std::max(p, std::norm(field.x[i]) + std::norm(field.y[i]));
        }
        return p;
    };
    // Integral of the power decay over a step, referenced to its midpoint.
    auto effective_length = [&](double h) {
        if (alpha == 0.0) {
            return h;
        }
        return -std::expm1(-alpha * h) / alpha * std::exp(alpha * h / 2.0);
    };
    auto linear = [&](double h) {
        if (h == 0.0) {
            return;
        }
        const double loss = std::exp(-alpha * h / 2.0);
        const double disp = 0.5 * fiber.beta2_ps2_per_km * h;
        for (auto* pol : {&field.x, &field.y}) {
            for (std::size_t i = 0; i < m; ++i) {
                (*pol)[i] *= std::polar(loss, disp * w[i] * w[i]);
            }
        }
    };
    auto next_step = [&](double remaining, double peak) {
        if (steps.mode == StepMode::fixed) {
            return std::min(remaining, length / static_cast<double>(steps.steps_per_span));
        }
        double h = std::min(remaining, steps.max_step_km);
        if (gamma_eff > 0.0 && peak > 0.0) {
            h = std::min(h, steps.target_nonlinear_phase / (gamma_eff * peak));
        }
        // Avoid a sliver at the end of the span.
        if (remaining - h < 1e-9 * length) {
            h = remaining;
        }
        return h;
    };

    const bool nonlinear = gamma_eff != 0.0;
    double z = 0.0;
    double h = next_step(length, peak_power());
    fft_forward(field.x);
    fft_forward(field.y);
    linear(h / 2.0);
    while (true) {
        fft_inverse(field.x);
        fft_inverse(field.y);
        double peak = 0.0;
        if (nonlinear) {
            const double coeff = gamma_eff * effective_length(h);
            for (std::size_t i = 0; i < m; ++i) {
                const double p = std::norm(field.x[i]) + std::norm(field.y[i]);
                const Complex rot = std::polar(1.0, coeff * p);
                field.x[i] *= rot;
                field.y[i] *= rot;
                peak = std::max(peak, p);
            }
            const double phase = coeff * peak;
            local.max_step_phase = std::max(local.max_step_phase, phase);
            if (steps.mode == StepMode::fixed && phase > steps.max_nonlinear_phase) {
                throw NumericalError("SSFM step too long: per-step nonlinear phase exceeds bound");
            }
        }
        ++local.steps;
        z += h;
        fft_forward(field.x);
        fft_forward(field.y);
        const double remaining = length - z;
        if (remaining <= 1e-12 * length) {
            linear(h / 2.0);
            break;
        }
        // Peak power at the start of the next step, from the midpoint value.
        const double h_next = next_step(remaining, peak * std::exp(-alpha * h / 2.0));
        linear((h + h_next) / 2.0);
        h = h_next;
    }
    fft_inverse(field.x);
    fft_inverse(field.y);
    if (stats != nullptr) {
        *stats = local;
    }
    field.validate();
    return field;
}

double ase_variance(double gain_db, const AmplifierParams& amp, double sample_rate_ghz) {
    const double g = std::pow(10.0, gain_db / 10.0);
    const double nsp = std::pow(10.0, amp.noise_figure_db / 10.0) / 2.0;
    const double h_nu = kPlanck * amp.center_frequency_thz * 1e12;
    return (g - 1.0) * h_nu * nsp * sample_rate_ghz * 1e9;
}

FieldWaveform edfa(FieldWaveform field, double gain_db, const AmplifierParams& amp,
                   RngStream& rng) {
    amp.validate();
    const double a = std::pow(10.0, gain_db / 20.0);
    for (std::size_t i = 0; i < field.size(); ++i) {
        field.x[i] *= a;
        field.y[i] *= a;
    }
    if (!amp.noiseless) {
        const double var = ase_variance(gain_db, amp, field.sample_rate_ghz);
        for (std::size_t i = 0; i < field.size(); ++i) {
            field.x[i] += rng.complex_gaussian(var);
            field.y[i] += rng.complex_gaussian(var);
        }
    }
    return field;
}

FieldWaveform propagate_link(FieldWaveform field, const FiberParams& fiber,
                             const AmplifierParams& amp, const StepConfig& steps,
                             std::uint64_t noise_seed) {
    for (std::size_t s = 0; s < fiber.n_spans; ++s) {
        field = ssfm_span(std::move(field), fiber, steps);
        RngStream rng(noise_seed, StreamTag::ase, s);
        field = edfa(std::move(field), fiber.span_loss_db(), amp, rng);
    }
    return field;
}

namespace {

constexpr char kMagic[4] = {'S', 'Q', 'W', 'F'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "waveform dump assumes a little-endian host");

}  // namespace

void write_waveform(const std::filesystem::path& path, const FieldWaveform& field) {
    field.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw std::runtime_error("cannot open " + path.string());
    }
    char header[32] = {};
    std::memcpy(header, kMagic, 4);
    std::memcpy(header + 4, &kVersion, 4);
    std::memcpy(header + 8, &field.sample_rate_ghz, 8);
    const std::uint64_t len = field.size();
    std::memcpy(header + 16, &len, 8);
    const std::uint32_t pols = 2;
    std::memcpy(header + 24, &pols, 4);
    os.write(header, sizeof header);
    for (const auto* pol : {&field.x, &field.y}) {
        for (const auto& s : *pol) {
            const float v[2] = {static_cast<float>(s.real()), static_cast<float>(s.imag())};
            os.write(reinterpret_cast<const char*>(v), sizeof v);
        }
    }
    if (!os) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

FieldWaveform read_waveform(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    char header[32];
    if (!is.read(header, sizeof header) || std::memcmp(header, kMagic, 4) != 0) {
        throw std::runtime_error("not a waveform dump: " + path.string());
    }
    FieldWaveform f;
    std::uint64_t len = 0;
    std::memcpy(&f.sample_rate_ghz, header + 8, 8);
    std::memcpy(&len, header + 16, 8);
    f.x.resize(len);
    f.y.resize(len);
    for (auto* pol : {&f.x, &f.y}) {
        for (auto& s : *pol) {
            float v[2];
            if (!is.read(reinterpret_cast<char*>(v), sizeof v)) {
                throw std::runtime_error("truncated waveform dump: " + path.string());
            }
            s = {v[0], v[1]};
        }
    }
    return f;
}

}  // namespace seqsel::channel
