#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "seqsel/rng.hpp"
#include "seqsel/types.hpp"

namespace seqsel::shaping {

using BigInt = boost::multiprecision::cpp_int;

/// Positive per-rail amplitude levels, strictly increasing, power-of-two count.
class AmplitudeAlphabet {
public:
    AmplitudeAlphabet() : AmplitudeAlphabet(std::vector<double>{1.0, 3.0, 5.0, 7.0}) {}
    explicit AmplitudeAlphabet(std::vector<double> levels);

    const std::vector<double>& levels() const { return levels_; }
    std::size_t size() const { return levels_.size(); }
    double max_level() const { return levels_.back(); }
    unsigned bits_per_amplitude() const { return bits_; }
    /// Index of the level equal to `value` (within 1e-9), or -1.
    int index_of(double value) const;
    /// Index of the level nearest to |value|; ties go to the lower level.
    std::size_t nearest(double magnitude) const;

private:
    std::vector<double> levels_;
    unsigned bits_ = 0;
};

struct ShapingConfig {
    double rate = 1.3;            // bits/amplitude
    std::size_t blocklength = 256;  // amplitudes per DM block
    AmplitudeAlphabet alphabet{};

    /// Input bits per DM block, ceil(N*R).
    std::size_t input_bits() const;
    void validate() const;
};

/// Counting trellis over the integer energy lattice of squared levels.
///
/// Every admissible energy has the form L*a0^2 + g*u, with a0 the smallest
/// level and g the gcd of the squared-level differences, so a suffix of
/// length L is described by its slack u (in units of g) alone.
/// count(p, u) is the number of length-(N-p) suffixes whose energy does not
/// exceed (N-p)*a0^2 + g*u.
class EssTrellis {
public:
    EssTrellis(const ShapingConfig& cfg, std::int64_t emax);

    std::size_t blocklength() const { return n_; }
    std::size_t input_bits() const { return k_; }
    std::int64_t emax() const { return emax_; }
    const AmplitudeAlphabet& alphabet() const { return alphabet_; }
    std::size_t slack_units() const { return slack_; }

    const BigInt& count(std::size_t position, std::size_t slack) const {
        return table_[position][slack];
    }
    /// Total number of admissible sequences, count(0, max slack).
    const BigInt& total() const { return table_[0][slack_]; }
    /// Energy of a level sequence on the integer lattice.
    std::int64_t energy_of(std::span<const double> amps) const;

    AmplitudeSequence encode_index(BigInt index) const;
    BigInt decode_index(std::span<const double> amps) const;

private:
    AmplitudeAlphabet alphabet_;
    std::size_t n_;
    std::size_t k_;
    std::int64_t emax_;
    std::int64_t base_;  // smallest squared level
    std::int64_t step_;  // lattice spacing g
    std::vector<std::size_t> offsets_;  // (a^2 - a0^2)/g per level
    std::size_t slack_;
    std::vector<std::vector<BigInt>> table_;
};

/// Integer squared levels; throws ConfigError when a level is not the square
/// root of an integer.
std::vector<std::int64_t> squared_levels(const AmplitudeAlphabet& alphabet);

/// Smallest sphere energy holding at least 2^k sequences.
std::int64_t ess_choose_emax(const ShapingConfig& cfg);
EssTrellis ess_build_trellis(const ShapingConfig& cfg, std::int64_t emax);
/// Convenience: choose emax and build.
EssTrellis ess_build_trellis(const ShapingConfig& cfg);

/// `bits` is a k-bit index, most significant bit first.
AmplitudeSequence ess_encode(std::span<const std::uint8_t> bits, const EssTrellis& trellis);
Bits ess_decode(std::span<const double> amps, const EssTrellis& trellis);

BigInt bits_to_index(std::span<const std::uint8_t> bits);
Bits index_to_bits(const BigInt& index, std::size_t width);

struct MbDistribution {
    double lambda = 0.0;
    std::vector<double> probs;
};

double entropy_bits(std::span<const double> probs);
/// MB probabilities for a given shaping parameter.
std::vector<double> mb_probs(double lambda, const AmplitudeAlphabet& alphabet);
/// Solves entropy(probs(lambda)) = target by bisection.
MbDistribution mb_fit(double target_entropy, const AmplitudeAlphabet& alphabet);
AmplitudeSequence mb_sample(const MbDistribution& dist, const AmplitudeAlphabet& alphabet,
                            RngStream& rng, std::size_t count);

/// Empirical amplitude marginal of an ESS matcher over `blocks` uniformly
/// random input blocks.
std::vector<double> ess_marginal(const EssTrellis& trellis, std::size_t blocks,
                                 std::uint64_t seed);

/// Signs: bit 1 means negative. Rails are filled (x.re, x.im, y.re, y.im).
Symbol4DSequence pas_map(std::span<const double> amps, std::span<const std::uint8_t> signs);
std::pair<AmplitudeSequence, Bits> pas_demap_hard(std::span<const Symbol4D> symbols,
                                                  const AmplitudeAlphabet& alphabet);

/// Rails of a 4D sequence in consumption order.
std::vector<double> to_rails(std::span<const Symbol4D> symbols);

/// Bit label of a signed rail point: sign bit followed by the binary-reflected
/// Gray code of the amplitude index (MSB first).
Bits rail_label(std::size_t amplitude_index, bool negative, unsigned amplitude_bits);

}  // namespace seqsel::shaping
