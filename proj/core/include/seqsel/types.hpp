#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace seqsel {

using Complex = std::complex<double>;
using Bits = std::vector<std::uint8_t>;

/// Invalid or inconsistent configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A received block cannot be mapped back to information (inadmissible
/// amplitude sequence, out-of-range pilot index, ...).
class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical routine left its validity region (step-size check, degenerate
/// estimator input).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One dual-polarization QAM symbol. Rails are consumed in the order
/// (x.real, x.imag, y.real, y.imag).
struct Symbol4D {
    Complex x;
    Complex y;

    double energy() const { return std::norm(x) + std::norm(y); }
    friend bool operator==(const Symbol4D&, const Symbol4D&) = default;
};

using Symbol4DSequence = std::vector<Symbol4D>;
using AmplitudeSequence = std::vector<double>;

}  // namespace seqsel
