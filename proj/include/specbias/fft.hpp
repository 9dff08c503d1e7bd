#pragma once

#include <complex>
#include <span>
#include <vector>

namespace specbias::fft {

using Complex = std::complex<double>;

/// Unnormalized forward DFT, X_f = sum_j x_j exp(-2 pi i f j / n).
std::vector<Complex> forward(std::span<const Complex> x);

/// Unnormalized inverse DFT, x_j = sum_f X_f exp(+2 pi i f j / n).
/// Divide by n to invert forward().
std::vector<Complex> backward(std::span<const Complex> x);

std::vector<Complex> forward_real(std::span<const double> x);

} // namespace specbias::fft
