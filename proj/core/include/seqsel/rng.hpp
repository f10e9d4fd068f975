#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "seqsel/types.hpp"

namespace seqsel {

// Substream tags. A stream is identified by (master seed, tag, a, b, c);
// keys never depend on scheduling, so any subset of work reproduces alone.
enum class StreamTag : std::uint64_t {
    data = 1,
    mb_amplitudes = 2,
    ase = 3,
    scrambler = 4,
    permutation = 5,
    marginal = 6,
    test = 99,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Seed for a counter-addressed substream.
std::uint64_t derive_seed(std::uint64_t master, StreamTag tag, std::uint64_t a = 0,
                          std::uint64_t b = 0, std::uint64_t c = 0);

/// Thin wrapper over mt19937_64. Uniform draws are built from raw engine
/// output so they are identical across standard libraries; Gaussian draws use
/// std::normal_distribution and are reproducible for a given toolchain.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}
    RngStream(std::uint64_t master, StreamTag tag, std::uint64_t a = 0, std::uint64_t b = 0,
              std::uint64_t c = 0)
        : engine_(derive_seed(master, tag, a, b, c)) {}

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    /// Uniform integer in [0, bound) by rejection (no modulo bias).
    std::uint64_t below(std::uint64_t bound);
    double gaussian() { return normal_(engine_); }
    /// Circular complex Gaussian with E|z|^2 = variance.
    Complex complex_gaussian(double variance);
    Bits bits(std::size_t count);

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace seqsel
