#include "si/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "si/fft.hpp"

namespace si::dsp {

namespace {

constexpr int kFilterOrder = 4;

struct Biquad {
  double b0, b1, b2, a1, a2;
};

// Butterworth design via bilinear transform, emitted as cascaded biquads.
// Even orders only (each conjugate analog pole pair maps to one section).
std::vector<Biquad> butter_sections(int order, double cutoff_hz, double fs,
                                    bool is_highpass) {
  if (order % 2 != 0) fail(ErrorCategory::InvalidParameter, "filter order must be even");
  if (cutoff_hz <= 0.0 || cutoff_hz >= fs / 2.0)
    fail(ErrorCategory::InvalidParameter,
         "cutoff " + std::to_string(cutoff_hz) + " Hz outside (0, Nyquist) at fs " +
             std::to_string(fs));

  const double k = 2.0 * fs;  // bilinear constant
  const double warped = k * std::tan(std::numbers::pi * cutoff_hz / fs);

  std::vector<Biquad> sections;
  for (int i = 0; i < order / 2; ++i) {
    // Upper-half-plane prototype pole; its conjugate completes the section.
    const double theta =
        std::numbers::pi * (2.0 * (i + 1) + order - 1.0) / (2.0 * order);
    const std::complex<double> proto(std::cos(theta), std::sin(theta));
    const std::complex<double> pole_a =
        is_highpass ? warped / proto : warped * proto;
    const std::complex<double> pole_z = (k + pole_a) / (k - pole_a);

    Biquad s;
    s.a1 = -2.0 * pole_z.real();
    s.a2 = std::norm(pole_z);
    if (is_highpass) {
      // Zeros at z = +1; unit gain at Nyquist.
      const double g = (1.0 - s.a1 + s.a2) / 4.0;
      s.b0 = g; s.b1 = -2.0 * g; s.b2 = g;
    } else {
      // Zeros at z = -1; unit gain at DC.
      const double g = (1.0 + s.a1 + s.a2) / 4.0;
      s.b0 = g; s.b1 = 2.0 * g; s.b2 = g;
    }
    sections.push_back(s);
  }
  return sections;
}

// Steady-state filter state for a unit-amplitude constant input
// (direct form II transposed), solved from (I - A) zi = B.
void section_zi(const Biquad& s, double* zi1, double* zi2) {
  const double b1 = s.b1 - s.a1 * s.b0;
  const double b2 = s.b2 - s.a2 * s.b0;
  const double det = 1.0 + s.a1 + s.a2;
  if (std::abs(det) < 1e-300) { *zi1 = 0.0; *zi2 = 0.0; return; }
  *zi1 = (b1 + b2) / det;
  *zi2 = ((1.0 + s.a1) * b2 - s.a2 * b1) / det;
}

void sosfilt_inplace(const std::vector<Biquad>& sections, std::vector<double>& x) {
  for (const Biquad& s : sections) {
    double zi1, zi2;
    section_zi(s, &zi1, &zi2);
    double z1 = zi1 * x.front();
    double z2 = zi2 * x.front();
    for (double& v : x) {
      const double y = s.b0 * v + z1;
      z1 = s.b1 * v - s.a1 * y + z2;
      z2 = s.b2 * v - s.a2 * y;
      v = y;
    }
  }
}

// Forward-backward filtering with odd-reflection padding at both ends.
std::vector<double> filtfilt(const std::vector<Biquad>& sections,
                             const std::vector<double>& x, double fs) {
  const std::size_t n = x.size();
  const std::size_t pad =
      std::min(n - 1, static_cast<std::size_t>(std::max(1024.0, 0.1 * fs)));

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) ext.push_back(2.0 * x[0] - x[pad - i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 0; i < pad; ++i)
    ext.push_back(2.0 * x[n - 1] - x[n - 2 - i]);

  sosfilt_inplace(sections, ext);
  std::reverse(ext.begin(), ext.end());
  sosfilt_inplace(sections, ext);
  std::reverse(ext.begin(), ext.end());

  return std::vector<double>(ext.begin() + pad, ext.begin() + pad + n);
}

Waveform filtered(const Waveform& w, double cutoff_hz, bool is_highpass,
                  const char* op) {
  w.require_nonempty(op);
  w.require_finite(op);
  if (cutoff_hz >= w.sample_rate_hz / 2.0)
    fail(ErrorCategory::InvalidParameter,
         std::string(op) + ": cutoff " + std::to_string(cutoff_hz) +
             " Hz is at or above Nyquist");
  // Single-sample signal: no frequency content to shape.
  if (w.samples.size() < 2) return w;
  auto sections = butter_sections(kFilterOrder, cutoff_hz, w.sample_rate_hz, is_highpass);
  return Waveform(filtfilt(sections, w.samples, w.sample_rate_hz), w.sample_rate_hz);
}

}  // namespace

Waveform highpass(const Waveform& w, double cutoff_hz) {
  return filtered(w, cutoff_hz, true, "highpass");
}

Waveform lowpass(const Waveform& w, double cutoff_hz) {
  return filtered(w, cutoff_hz, false, "lowpass");
}

Waveform rms_energy(const Waveform& w) {
  w.require_nonempty("rms_energy");
  Waveform out(std::vector<double>(w.samples.size()), w.sample_rate_hz);
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    out.samples[i] = std::abs(w.samples[i]);
  return out;
}

int ma_window_samples(double window_ms, double sample_rate_hz) {
  return static_cast<int>(std::lround(window_ms / 1000.0 * sample_rate_hz));
}

Waveform moving_average(const Waveform& w, double window_ms) {
  w.require_nonempty("moving_average");
  const std::size_t n = w.samples.size();
  const int win = ma_window_samples(window_ms, w.sample_rate_hz);
  if (win < 1)
    fail(ErrorCategory::InvalidParameter, "moving_average: window shorter than one sample");
  if (static_cast<std::size_t>(win) > n)
    fail(ErrorCategory::InvalidParameter,
         "moving_average: window of " + std::to_string(win) +
             " samples longer than signal of " + std::to_string(n));

  // Prefix sums of deviations from the first sample keep a constant input
  // exactly constant, edge windows included.
  const double ref = w.samples[0];
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + (w.samples[i] - ref);

  const int half_l = (win - 1) / 2;
  const int half_r = win - 1 - half_l;
  Waveform out(std::vector<double>(n), w.sample_rate_hz);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i >= static_cast<std::size_t>(half_l) ? i - half_l : 0;
    const std::size_t b = std::min(n, i + half_r + 1);
    out.samples[i] = ref + (prefix[b] - prefix[a]) / static_cast<double>(b - a);
  }
  return out;
}

Waveform windowed_rms(const Waveform& w, double window_ms) {
  w.require_nonempty("windowed_rms");
  Waveform sq(std::vector<double>(w.samples.size()), w.sample_rate_hz);
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    sq.samples[i] = w.samples[i] * w.samples[i];
  Waveform avg = moving_average(sq, window_ms);
  for (double& v : avg.samples) v = std::sqrt(std::max(0.0, v));
  return avg;
}

Waveform hilbert_envelope(const Waveform& w) {
  w.require_nonempty("hilbert_envelope");
  w.require_finite("hilbert_envelope");
  auto z = analytic_signal(w.samples);
  Waveform out(std::vector<double>(w.samples.size()), w.sample_rate_hz);
  for (std::size_t i = 0; i < z.size(); ++i) out.samples[i] = std::abs(z[i]);
  return out;
}

std::vector<double> resample_to(const Waveform& w, double target_hz) {
  w.require_nonempty("resample_to");
  if (target_hz <= 0.0)
    fail(ErrorCategory::InvalidParameter, "resample_to: target rate must be positive");
  if (target_hz > w.sample_rate_hz)
    fail(ErrorCategory::InvalidParameter,
         "resample_to: upsampling not supported (target " + std::to_string(target_hz) +
             " > source " + std::to_string(w.sample_rate_hz) + ")");

  const std::size_t len =
      static_cast<std::size_t>(std::lround(w.duration_s() * target_hz));
  if (len == 0)
    fail(ErrorCategory::InvalidParameter, "resample_to: signal too short for target rate");

  const Waveform* src = &w;
  Waveform aa;
  if (target_hz < w.sample_rate_hz && w.samples.size() >= 2) {
    aa = lowpass(w, 0.45 * target_hz);
    src = &aa;
  }

  std::vector<double> out(len);
  const std::size_t n = src->samples.size();
  for (std::size_t k = 0; k < len; ++k) {
    const double u = static_cast<double>(k) / target_hz * w.sample_rate_hz;
    std::size_t i = static_cast<std::size_t>(u);
    if (i >= n - 1) i = n - (n > 1 ? 2 : 1);
    const double frac = u - static_cast<double>(i);
    out[k] = n > 1 ? (1.0 - frac) * src->samples[i] + frac * src->samples[i + 1]
                   : src->samples[0];
  }
  return out;
}

std::vector<double> normalize_pm1(const std::vector<double>& values, NormMode mode,
                                  bool* degenerate) {
  if (values.empty()) fail(ErrorCategory::EmptyInput, "normalize_pm1: empty input");
  for (double v : values)
    if (!std::isfinite(v)) fail(ErrorCategory::Numeric, "normalize_pm1: non-finite value");
  if (degenerate) *degenerate = false;

  std::vector<double> out(values.size());
  if (mode == NormMode::FixedUnit) {
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = 2.0 * values[i] - 1.0;
    return out;
  }

  const auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
  const double mn = *mn_it, mx = *mx_it;
  const double span = mx - mn;
  const double scale_ref = std::max({std::abs(mn), std::abs(mx), 1e-12});
  if (span <= kDegenerateSpanRel * scale_ref) {
    if (degenerate) *degenerate = true;
    std::fill(out.begin(), out.end(), 0.0);
    return out;
  }
  for (std::size_t i = 0; i < values.size(); ++i)
    out[i] = 2.0 * ((values[i] - mn) / span) - 1.0;
  return out;
}

}  // namespace si::dsp
