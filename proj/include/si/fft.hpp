#pragma once

#include <complex>
#include <vector>

namespace si::dsp {

// Complex FFT of arbitrary length (FFTW backend, double precision).
// inverse=true applies the unscaled inverse transform; callers divide by n.
std::vector<std::complex<double>> fft(const std::vector<std::complex<double>>& x,
                                      bool inverse);

// Analytic signal via the frequency-domain construction over the full input.
std::vector<std::complex<double>> analytic_signal(const std::vector<double>& x);

}  // namespace si::dsp
