#include "si/fft.hpp"

#include <fftw3.h>

#include <mutex>

#include "si/common.hpp"

namespace si::dsp {

namespace {
// FFTW plan creation is not thread-safe; execution on distinct arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

std::vector<std::complex<double>> fft(const std::vector<std::complex<double>>& x,
                                      bool inverse) {
  if (x.empty()) fail(ErrorCategory::EmptyInput, "fft: empty input");
  const int n = static_cast<int>(x.size());
  std::vector<std::complex<double>> in(x), out(x.size());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(in.data()),
                            reinterpret_cast<fftw_complex*>(out.data()),
                            inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

std::vector<std::complex<double>> analytic_signal(const std::vector<double>& x) {
  if (x.empty()) fail(ErrorCategory::EmptyInput, "analytic_signal: empty input");
  const std::size_t n = x.size();
  std::vector<std::complex<double>> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = {x[i], 0.0};
  auto spec = fft(buf, false);

  // Zero negative frequencies, double positive ones; DC (and Nyquist for even
  // n) keep unit weight.
  const std::size_t half = n / 2;
  for (std::size_t k = 1; k < (n + 1) / 2; ++k) spec[k] *= 2.0;
  for (std::size_t k = half + 1; k < n; ++k) spec[k] = 0.0;

  auto z = fft(spec, true);
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& v : z) v *= scale;
  return z;
}

}  // namespace si::dsp
