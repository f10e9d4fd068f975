#include "seqsel/rng.hpp"

#include <cmath>

namespace seqsel {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, StreamTag tag, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
    std::uint64_t h = splitmix64(master);
    for (std::uint64_t v : {static_cast<std::uint64_t>(tag), a, b, c}) {
        h = splitmix64(h ^ v);
    }
    return h;
}

std::uint64_t RngStream::below(std::uint64_t bound) {
    if (bound <= 1) {
        return 0;
    }
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t v;
    do {
        v = engine_();
    } while (v >= limit);
    return v % bound;
}

Complex RngStream::complex_gaussian(double variance) {
    const double s = std::sqrt(variance / 2.0);
    const double re = gaussian();
    const double im = gaussian();
    return {s * re, s * im};
}

Bits RngStream::bits(std::size_t count) {
    Bits out(count);
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < count; ++i) {
        if (i % 64 == 0) {
            word = engine_();
        }
        out[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1U);
    }
    return out;
}

}  // namespace seqsel
