#include "seqsel/receiver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace seqsel::receiver {

channel::FieldWaveform cdc(channel::FieldWaveform field, const RxChain& rx) {
    channel::apply_dispersion(field, -rx.cdc_total_dispersion_ps2);
    return field;
}

Symbol4DSequence matched_filter_sample(const channel::FieldWaveform& field, const RxChain& rx) {
    if (rx.sps < 2 || field.size() % rx.sps != 0) {
        throw ConfigError("matched filter: waveform length is not a multiple of sps");
    }
    auto x = field.x;
    auto y = field.y;
    channel::rrc_filter(x, rx.sps, rx.rolloff);
    channel::rrc_filter(y, rx.sps, rx.rolloff);
    Symbol4DSequence out(field.size() / rx.sps);
    const double inv = 1.0 / rx.tx_scale;
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k].x = x[k * rx.sps] * inv;
        out[k].y = y[k * rx.sps] * inv;
    }
    return out;
}

PhaseEstimate estimate_mean_phase(std::span<const Symbol4D> received,
                                  std::span<const Symbol4D> reference) {
    if (received.size() != reference.size()) {
        throw ConfigError("phase estimate: length mismatch");
    }
    Complex cx = 0.0;
    Complex cy = 0.0;
    for (std::size_t k = 0; k < received.size(); ++k) {
        cx += received[k].x * std::conj(reference[k].x);
        cy += received[k].y * std::conj(reference[k].y);
    }
    if (std::abs(cx) == 0.0 || std::abs(cy) == 0.0) {
        throw NumericalError("phase estimate: zero correlation (degenerate block)");
    }
    return {std::arg(cx), std::arg(cy)};
}

Symbol4DSequence mean_phase_comp(std::span<const Symbol4D> received,
                                 std::span<const Symbol4D> reference) {
    const auto theta = estimate_mean_phase(received, reference);
    const Complex rx = std::polar(1.0, -theta.x);
    const Complex ry = std::polar(1.0, -theta.y);
    Symbol4DSequence out(received.begin(), received.end());
    for (auto& s : out) {
        s.x *= rx;
        s.y *= ry;
    }
    return out;
}

namespace {

// Signed rail points with priors and labels.
struct RailConstellation {
    std::vector<double> points;
    std::vector<double> log_prior;
    std::vector<Bits> labels;
    double entropy = 0.0;  // bits per rail
    unsigned bits = 0;

    std::size_t index_of(double v, const shaping::AmplitudeAlphabet& alphabet) const {
        const int a = alphabet.index_of(std::abs(v));
        if (a < 0) {
            throw ConfigError("AIR: transmitted rail value is not a constellation point");
        }
        return 2 * static_cast<std::size_t>(a) + (v < 0.0 ? 1 : 0);
    }
};

RailConstellation make_rail(const shaping::AmplitudeAlphabet& alphabet,
                            std::span<const double> priors) {
    if (priors.size() != alphabet.size()) {
        throw ConfigError("AIR: prior size does not match the alphabet");
    }
    RailConstellation c;
    c.bits = alphabet.bits_per_amplitude() + 1;
    for (std::size_t a = 0; a < alphabet.size(); ++a) {
        for (int neg = 0; neg < 2; ++neg) {
            c.points.push_back((neg ? -1.0 : 1.0) * alphabet.levels()[a]);
            const double p = priors[a] / 2.0;
            c.log_prior.push_back(p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity());
            c.labels.push_back(shaping::rail_label(a, neg != 0, alphabet.bits_per_amplitude()));
        }
    }
    c.entropy = shaping::entropy_bits(priors) + 1.0;
    return c;
}

double log_sum_exp(std::span<const double> v, const std::vector<bool>* mask = nullptr) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if ((mask == nullptr || (*mask)[i]) && v[i] > mx) {
            mx = v[i];
        }
    }
    if (!std::isfinite(mx)) {
        return mx;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (mask == nullptr || (*mask)[i]) {
            s += std::exp(v[i] - mx);
        }
    }
    return mx + std::log(s);
}

enum class Metric { bitwise, symbolwise };

AirResult compute_air(std::span<const Symbol4D> tx, std::span<const Symbol4D> rx,
                      const shaping::AmplitudeAlphabet& alphabet, std::span<const double> priors,
                      Metric metric) {
    if (tx.size() != rx.size()) {
        throw ConfigError("AIR: tx/rx length mismatch");
    }
    if (tx.size() < kMinAirSymbols) {
        throw NumericalError("AIR: fewer than 1000 symbols, estimate unreliable");
    }
    const RailConstellation c = make_rail(alphabet, priors);
    AirResult res;
    res.n_symbols = tx.size();
    res.entropy_bits_per_4d = 4.0 * c.entropy;

    double err = 0.0;
    for (std::size_t k = 0; k < tx.size(); ++k) {
        err += std::norm(rx[k].x - tx[k].x) + std::norm(rx[k].y - tx[k].y);
    }
    res.noise_variance_est = err / (2.0 * static_cast<double>(tx.size()));
    const double rail_var = res.noise_variance_est / 2.0;
    const double scale = 1e-30 * (1.0 + std::abs(c.points.back()) * std::abs(c.points.back()));
    if (rail_var <= scale) {
        res.air_bits_per_4d = res.entropy_bits_per_4d;
        return res;
    }

    // Per-bit masks: points whose label bit b equals v.
    std::vector<std::vector<bool>> mask[2];
    for (int v = 0; v < 2; ++v) {
        mask[v].assign(c.bits, std::vector<bool>(c.points.size()));
        for (unsigned b = 0; b < c.bits; ++b) {
            for (std::size_t j = 0; j < c.points.size(); ++j) {
                mask[v][b][j] = c.labels[j][b] == v;
            }
        }
    }

    const double inv_ln2 = 1.0 / std::log(2.0);
    std::vector<double> metric_j(c.points.size());
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t k = 0; k < tx.size(); ++k) {
        const double tr[4] = {tx[k].x.real(), tx[k].x.imag(), tx[k].y.real(), tx[k].y.imag()};
        const double rr[4] = {rx[k].x.real(), rx[k].x.imag(), rx[k].y.real(), rx[k].y.imag()};
        double sample = 0.0;
        for (int r = 0; r < 4; ++r) {
            const std::size_t t = c.index_of(tr[r], alphabet);
            for (std::size_t j = 0; j < c.points.size(); ++j) {
                const double d = rr[r] - c.points[j];
                metric_j[j] = c.log_prior[j] - d * d / (2.0 * rail_var);
            }
            const double all = log_sum_exp(metric_j);
            double loss = 0.0;
            if (metric == Metric::bitwise) {
                for (unsigned b = 0; b < c.bits; ++b) {
                    loss += all - log_sum_exp(metric_j, &mask[c.labels[t][b]][b]);
                }
            } else {
                loss = all - metric_j[t];
            }
            sample += c.entropy - loss * inv_ln2;
        }
        sum += sample;
        sum_sq += sample * sample;
    }
    const double n = static_cast<double>(tx.size());
    const double mean = sum / n;
    const double var = std::max(0.0, sum_sq / n - mean * mean);
    res.air_bits_per_4d = std::max(0.0, mean);
    res.ci95 = 1.96 * std::sqrt(var / n);
    return res;
}

}  // namespace

AirResult air_bitwise(std::span<const Symbol4D> tx, std::span<const Symbol4D> rx,
                      const shaping::AmplitudeAlphabet& alphabet,
                      std::span<const double> amplitude_priors) {
    return compute_air(tx, rx, alphabet, amplitude_priors, Metric::bitwise);
}

AirResult air_symbolwise(std::span<const Symbol4D> tx, std::span<const Symbol4D> rx,
                         const shaping::AmplitudeAlphabet& alphabet,
                         std::span<const double> amplitude_priors) {
    return compute_air(tx, rx, alphabet, amplitude_priors, Metric::symbolwise);
}

double se_from_air(double air_bits_per_4d, const channel::WdmConfig& wdm,
                   double overhead_bits_per_4d, double slot_factor) {
    return std::max(0.0, air_bits_per_4d - overhead_bits_per_4d) * wdm.symbol_rate_gbd /
           wdm.spacing_ghz * slot_factor;
}

}  // namespace seqsel::receiver
