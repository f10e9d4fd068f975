#include "seqsel/shaping.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace seqsel::shaping {

namespace {

bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

}  // namespace

AmplitudeAlphabet::AmplitudeAlphabet(std::vector<double> levels) : levels_(std::move(levels)) {
    if (levels_.empty() || !is_power_of_two(levels_.size())) {
        throw ConfigError("amplitude alphabet size must be a power of two");
    }
    for (std::size_t i = 0; i < levels_.size(); ++i) {
        if (!(levels_[i] > 0.0)) {
            throw ConfigError("amplitude levels must be positive");
        }
        if (i > 0 && !(levels_[i] > levels_[i - 1])) {
            throw ConfigError("amplitude levels must be strictly increasing");
        }
    }
    while ((std::size_t{1} << bits_) < levels_.size()) {
        ++bits_;
    }
}

int AmplitudeAlphabet::index_of(double value) const {
    for (std::size_t i = 0; i < levels_.size(); ++i) {
        if (std::abs(levels_[i] - value) <= 1e-9) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

std::size_t AmplitudeAlphabet::nearest(double magnitude) const {
    std::size_t best = 0;
    double best_d = std::abs(magnitude - levels_[0]);
    for (std::size_t i = 1; i < levels_.size(); ++i) {
        const double d = std::abs(magnitude - levels_[i]);
        if (d < best_d) {
            best = i;
            best_d = d;
        }
    }
    return best;
}

std::size_t ShapingConfig::input_bits() const {
    // Guard against N*R landing a hair above an integer through rounding.
    const double nr = static_cast<double>(blocklength) * rate;
    return static_cast<std::size_t>(std::ceil(nr - 1e-9));
}

void ShapingConfig::validate() const {
    if (blocklength < 1) {
        throw ConfigError("shaping blocklength must be >= 1");
    }
    if (!(rate > 0.0) || rate > alphabet.bits_per_amplitude() + 1e-12) {
        throw ConfigError("shaping rate must lie in (0, log2|alphabet|]");
    }
}

std::vector<std::int64_t> squared_levels(const AmplitudeAlphabet& alphabet) {
    std::vector<std::int64_t> sq;
    for (double a : alphabet.levels()) {
        const double s = a * a;
        const double r = std::round(s);
        if (std::abs(s - r) > 1e-9) {
            throw ConfigError("ESS requires integer squared amplitude levels");
        }
        sq.push_back(static_cast<std::int64_t>(r));
    }
    return sq;
}

namespace {

struct Lattice {
    std::int64_t base;
    std::int64_t step;
    std::vector<std::size_t> offsets;
};

Lattice make_lattice(const AmplitudeAlphabet& alphabet) {
    const auto sq = squared_levels(alphabet);
    Lattice lat{sq.front(), 0, {}};
    for (auto s : sq) {
        lat.step = std::gcd(lat.step, s - lat.base);
    }
    if (lat.step == 0) {
        lat.step = 1;
    }
    for (auto s : sq) {
        lat.offsets.push_back(static_cast<std::size_t>((s - lat.base) / lat.step));
    }
    return lat;
}

}  // namespace

std::int64_t ess_choose_emax(const ShapingConfig& cfg) {
    cfg.validate();
    const std::size_t n = cfg.blocklength;
    const std::size_t k = cfg.input_bits();
    if (k > n * cfg.alphabet.bits_per_amplitude()) {
        throw ConfigError("rate infeasible: 2^k exceeds the number of amplitude sequences");
    }
    const Lattice lat = make_lattice(cfg.alphabet);
    const std::size_t max_off = lat.offsets.back();

    // Exact number of sequences per slack value, one position at a time.
    std::vector<BigInt> dist{1};
    for (std::size_t p = 0; p < n; ++p) {
        std::vector<BigInt> next(dist.size() + max_off);
        for (std::size_t u = 0; u < dist.size(); ++u) {
            if (dist[u] == 0) {
                continue;
            }
            for (auto off : lat.offsets) {
                next[u + off] += dist[u];
            }
        }
        dist = std::move(next);
    }
    const BigInt need = BigInt{1} << k;
    BigInt cum = 0;
    for (std::size_t u = 0; u < dist.size(); ++u) {
        cum += dist[u];
        if (cum >= need) {
            return static_cast<std::int64_t>(n) * lat.base +
                   static_cast<std::int64_t>(u) * lat.step;
        }
    }
    throw ConfigError("rate infeasible for the given alphabet and blocklength");
}

EssTrellis::EssTrellis(const ShapingConfig& cfg, std::int64_t emax)
    : alphabet_(cfg.alphabet), n_(cfg.blocklength), k_(cfg.input_bits()), emax_(emax) {
    cfg.validate();
    const Lattice lat = make_lattice(alphabet_);
    base_ = lat.base;
    step_ = lat.step;
    offsets_ = lat.offsets;
    const std::int64_t floor_energy = static_cast<std::int64_t>(n_) * base_;
    if (emax_ < floor_energy) {
        throw ConfigError("emax below the minimum block energy");
    }
    slack_ = static_cast<std::size_t>((emax_ - floor_energy) / step_);

    table_.assign(n_ + 1, std::vector<BigInt>(slack_ + 1));
    std::fill(table_[n_].begin(), table_[n_].end(), BigInt{1});
    for (std::size_t p = n_; p-- > 0;) {
        const auto& below = table_[p + 1];
        auto& row = table_[p];
        for (std::size_t u = 0; u <= slack_; ++u) {
            BigInt acc = 0;
            for (auto off : offsets_) {
                if (off <= u) {
                    acc += below[u - off];
                }
            }
            row[u] = std::move(acc);
        }
    }
    if (total() < (BigInt{1} << k_)) {
        throw ConfigError("emax too small for the requested rate");
    }
}

std::int64_t EssTrellis::energy_of(std::span<const double> amps) const {
    const auto sq = squared_levels(alphabet_);
    std::int64_t e = 0;
    for (double a : amps) {
        const int idx = alphabet_.index_of(a);
        if (idx < 0) {
            throw DecodeError("amplitude not in alphabet");
        }
        e += sq[static_cast<std::size_t>(idx)];
    }
    return e;
}

AmplitudeSequence EssTrellis::encode_index(BigInt index) const {
    if (index < 0 || index >= total()) {
        throw DecodeError("ESS index out of range");
    }
    AmplitudeSequence out(n_);
    std::size_t slack = slack_;
    const auto& levels = alphabet_.levels();
    for (std::size_t p = 0; p < n_; ++p) {
        bool placed = false;
        for (std::size_t a = 0; a < levels.size(); ++a) {
            if (offsets_[a] > slack) {
                break;
            }
            const BigInt& c = table_[p + 1][slack - offsets_[a]];
            if (index < c) {
                out[p] = levels[a];
                slack -= offsets_[a];
                placed = true;
                break;
            }
            index -= c;
        }
        if (!placed) {
            throw DecodeError("ESS trellis inconsistent with index");
        }
    }
    return out;
}

BigInt EssTrellis::decode_index(std::span<const double> amps) const {
    if (amps.size() != n_) {
        throw DecodeError("ESS block length mismatch");
    }
    BigInt index = 0;
    std::size_t slack = slack_;
    for (std::size_t p = 0; p < n_; ++p) {
        const int a = alphabet_.index_of(amps[p]);
        if (a < 0) {
            throw DecodeError("amplitude not in alphabet");
        }
        const auto ai = static_cast<std::size_t>(a);
        if (offsets_[ai] > slack) {
            throw DecodeError("amplitude sequence exceeds the ESS energy bound");
        }
        for (std::size_t b = 0; b < ai; ++b) {
            index += table_[p + 1][slack - offsets_[b]];
        }
        slack -= offsets_[ai];
    }
    return index;
}

EssTrellis ess_build_trellis(const ShapingConfig& cfg, std::int64_t emax) {
    return EssTrellis(cfg, emax);
}

EssTrellis ess_build_trellis(const ShapingConfig& cfg) {
    return EssTrellis(cfg, ess_choose_emax(cfg));
}

BigInt bits_to_index(std::span<const std::uint8_t> bits) {
    BigInt v = 0;
    for (auto b : bits) {
        v <<= 1;
        if (b) {
            v |= 1;
        }
    }
    return v;
}

Bits index_to_bits(const BigInt& index, std::size_t width) {
    Bits out(width);
    for (std::size_t i = 0; i < width; ++i) {
        out[width - 1 - i] = bit_test(index, static_cast<unsigned>(i)) ? 1 : 0;
    }
    return out;
}

AmplitudeSequence ess_encode(std::span<const std::uint8_t> bits, const EssTrellis& trellis) {
    if (bits.size() != trellis.input_bits()) {
        throw ConfigError("ESS input block must hold exactly k bits");
    }
    return trellis.encode_index(bits_to_index(bits));
}

Bits ess_decode(std::span<const double> amps, const EssTrellis& trellis) {
    const BigInt index = trellis.decode_index(amps);
    if (index >= (BigInt{1} << trellis.input_bits())) {
        throw DecodeError("ESS sequence outside the used index range");
    }
    return index_to_bits(index, trellis.input_bits());
}

double entropy_bits(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs) {
        if (p > 0.0) {
            h -= p * std::log2(p);
        }
    }
    return h;
}

std::vector<double> mb_probs(double lambda, const AmplitudeAlphabet& alphabet) {
    const auto& levels = alphabet.levels();
    const double e0 = levels.front() * levels.front();
    std::vector<double> p(levels.size());
    double z = 0.0;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        p[i] = std::exp(-lambda * (levels[i] * levels[i] - e0));
        z += p[i];
    }
    for (double& v : p) {
        v /= z;
    }
    return p;
}

MbDistribution mb_fit(double target_entropy, const AmplitudeAlphabet& alphabet) {
    const double hmax = std::log2(static_cast<double>(alphabet.size()));
    if (!(target_entropy > 0.0) || target_entropy > hmax + 1e-12) {
        throw ConfigError("MB target entropy must lie in (0, log2|alphabet|]");
    }
    if (target_entropy >= hmax - 1e-13) {
        return {0.0, mb_probs(0.0, alphabet)};
    }
    auto h = [&](double lambda) { return entropy_bits(mb_probs(lambda, alphabet)); };
    double lo = 0.0;
    double hi = 1e-3;
    while (h(hi) > target_entropy) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) {
            throw ConfigError("MB target entropy too small to bracket");
        }
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (h(mid) > target_entropy) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo <= 1e-15 * hi) {
            break;
        }
    }
    const double lambda = 0.5 * (lo + hi);
    return {lambda, mb_probs(lambda, alphabet)};
}

AmplitudeSequence mb_sample(const MbDistribution& dist, const AmplitudeAlphabet& alphabet,
                            RngStream& rng, std::size_t count) {
    if (dist.probs.size() != alphabet.size()) {
        throw ConfigError("MB distribution does not match the alphabet");
    }
    std::vector<double> cdf(dist.probs.size());
    std::partial_sum(dist.probs.begin(), dist.probs.end(), cdf.begin());
    AmplitudeSequence out(count);
    for (auto& a : out) {
        const double u = rng.uniform() * cdf.back();
        const auto it = std::upper_bound(cdf.begin(), cdf.end() - 1, u);
        a = alphabet.levels()[static_cast<std::size_t>(it - cdf.begin())];
    }
    return out;
}

std::vector<double> ess_marginal(const EssTrellis& trellis, std::size_t blocks,
                                 std::uint64_t seed) {
    std::vector<double> freq(trellis.alphabet().size(), 0.0);
    RngStream rng(seed);
    for (std::size_t b = 0; b < blocks; ++b) {
        const auto amps = ess_encode(rng.bits(trellis.input_bits()), trellis);
        for (double a : amps) {
            freq[static_cast<std::size_t>(trellis.alphabet().index_of(a))] += 1.0;
        }
    }
    const double total = std::accumulate(freq.begin(), freq.end(), 0.0);
    for (double& f : freq) {
        f /= total;
    }
    return freq;
}

Symbol4DSequence pas_map(std::span<const double> amps, std::span<const std::uint8_t> signs) {
    if (amps.size() != signs.size() || amps.size() % 4 != 0) {
        std::ostringstream os;
        os << "pas_map: " << amps.size() << " amplitudes / " << signs.size()
           << " signs; both must be equal and a multiple of 4";
        throw ConfigError(os.str());
    }
    Symbol4DSequence out(amps.size() / 4);
    auto rail = [&](std::size_t i) { return (signs[i] ? -1.0 : 1.0) * amps[i]; };
    for (std::size_t s = 0; s < out.size(); ++s) {
        const std::size_t o = 4 * s;
        out[s].x = {rail(o), rail(o + 1)};
        out[s].y = {rail(o + 2), rail(o + 3)};
    }
    return out;
}

std::vector<double> to_rails(std::span<const Symbol4D> symbols) {
    std::vector<double> r;
    r.reserve(4 * symbols.size());
    for (const auto& s : symbols) {
        r.push_back(s.x.real());
        r.push_back(s.x.imag());
        r.push_back(s.y.real());
        r.push_back(s.y.imag());
    }
    return r;
}

std::pair<AmplitudeSequence, Bits> pas_demap_hard(std::span<const Symbol4D> symbols,
                                                  const AmplitudeAlphabet& alphabet) {
    const auto rails = to_rails(symbols);
    AmplitudeSequence amps(rails.size());
    Bits signs(rails.size());
    for (std::size_t i = 0; i < rails.size(); ++i) {
        amps[i] = alphabet.levels()[alphabet.nearest(std::abs(rails[i]))];
        signs[i] = rails[i] < 0.0 ? 1 : 0;
    }
    return {std::move(amps), std::move(signs)};
}

Bits rail_label(std::size_t amplitude_index, bool negative, unsigned amplitude_bits) {
    Bits label(amplitude_bits + 1);
    label[0] = negative ? 1 : 0;
    const std::size_t gray = amplitude_index ^ (amplitude_index >> 1);
    for (unsigned i = 0; i < amplitude_bits; ++i) {
        label[1 + i] = static_cast<std::uint8_t>((gray >> (amplitude_bits - 1 - i)) & 1U);
    }
    return label;
}

}  // namespace seqsel::shaping
