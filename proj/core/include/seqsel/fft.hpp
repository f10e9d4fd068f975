#pragma once

#include <span>
#include <vector>

#include "seqsel/types.hpp"

namespace seqsel {

/// In-place FFTs backed by FFTW. Plans are cached per thread and per size;
/// plan creation is serialized, execution is not.
void fft_forward(std::span<Complex> data);
/// Normalized inverse (divides by the length).
void fft_inverse(std::span<Complex> data);

/// Angular frequency of every FFT bin in rad per unit time, for sample
/// period `dt` (standard FFT bin order, negative frequencies in the upper half).
std::vector<double> angular_frequencies(std::size_t n, double dt);

}  // namespace seqsel
