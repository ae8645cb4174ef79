#include "si/mel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "si/dsp.hpp"
#include "si/fft.hpp"

namespace si {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> mel_band_edges_hz(int bands, double fmin_hz, double fmax_hz) {
  const double mel_lo = hz_to_mel(fmin_hz);
  const double mel_hi = hz_to_mel(fmax_hz);
  std::vector<double> edges(bands + 2);
  for (int i = 0; i < bands + 2; ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (bands + 1));
  return edges;
}

namespace {

// Linear-interpolation rate conversion; anti-alias low-pass only when
// decimating (upsampling creates no images to remove).
Waveform to_rate(const Waveform& w, double target_hz) {
  if (w.sample_rate_hz == target_hz) return w;
  if (w.sample_rate_hz > target_hz)
    return Waveform(dsp::resample_to(w, target_hz), target_hz);
  const std::size_t len =
      static_cast<std::size_t>(std::lround(w.duration_s() * target_hz));
  std::vector<double> out(len);
  const std::size_t n = w.samples.size();
  for (std::size_t k = 0; k < len; ++k) {
    const double u = static_cast<double>(k) / target_hz * w.sample_rate_hz;
    std::size_t i = static_cast<std::size_t>(u);
    if (i >= n - 1) i = n > 1 ? n - 2 : 0;
    const double frac = u - static_cast<double>(i);
    out[k] = n > 1 ? (1.0 - frac) * w.samples[i] + frac * w.samples[i + 1] : w.samples[0];
  }
  return Waveform(std::move(out), target_hz);
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

FeatureSequence mel_spectrogram(const Waveform& input, const MelOptions& opts,
                                bool normalize) {
  input.require_nonempty("mel_frontend");
  input.require_finite("mel_frontend");
  if (input.duration_s() < 0.04)
    fail(ErrorCategory::EmptyInput, "mel_frontend: audio shorter than 40 ms");

  const Waveform w = to_rate(input, opts.sample_rate_hz);
  const int win = static_cast<int>(std::lround(opts.window_ms / 1000.0 * opts.sample_rate_hz));
  const int hop = static_cast<int>(std::lround(opts.hop_ms / 1000.0 * opts.sample_rate_hz));
  const std::size_t n = w.samples.size();
  const int n_frames = static_cast<int>((n + hop - 1) / hop);  // centers i*hop < n
  const std::size_t nfft = next_pow2(static_cast<std::size_t>(win));
  const std::size_t n_bins = nfft / 2 + 1;

  // Hann window.
  std::vector<double> window(win);
  for (int i = 0; i < win; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (win - 1));

  // Triangular mel filters over FFT bins.
  const auto edges = mel_band_edges_hz(opts.bands, opts.fmin_hz,
                                       std::min(opts.fmax_hz, opts.sample_rate_hz / 2.0));
  std::vector<std::vector<std::pair<int, double>>> filters(opts.bands);
  for (int b = 0; b < opts.bands; ++b) {
    const double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * opts.sample_rate_hz / nfft;
      double wgt = 0.0;
      if (f > lo && f < mid) wgt = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi) wgt = (hi - f) / (hi - mid);
      if (wgt > 0.0) filters[b].emplace_back(static_cast<int>(k), wgt);
    }
  }

  FeatureSequence feat;
  feat.frames = n_frames;
  feat.layers = 1;
  feat.dim = opts.bands;
  feat.frame_rate_hz = static_cast<float>(1000.0 / opts.hop_ms);
  feat.data.resize(feat.expected_size());

  std::vector<std::complex<double>> buf(nfft);
  for (int t = 0; t < n_frames; ++t) {
    const long center = static_cast<long>(t) * hop;
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    for (int i = 0; i < win; ++i) {
      const long idx = center - win / 2 + i;
      const double s = (idx >= 0 && idx < static_cast<long>(n)) ? w.samples[idx] : 0.0;
      buf[i] = {s * window[i], 0.0};
    }
    auto spec = dsp::fft(buf, false);
    for (int b = 0; b < opts.bands; ++b) {
      double e = 0.0;
      for (const auto& [k, wgt] : filters[b]) e += wgt * std::norm(spec[k]);
      feat.at(t, 0, b) = static_cast<float>(std::log(std::max(e, 1e-10)));
    }
  }

  if (normalize) {
    for (int b = 0; b < opts.bands; ++b) {
      double mean = 0.0;
      for (int t = 0; t < n_frames; ++t) mean += feat.at(t, 0, b);
      mean /= n_frames;
      double var = 0.0;
      for (int t = 0; t < n_frames; ++t) {
        const double d = feat.at(t, 0, b) - mean;
        var += d * d;
      }
      var /= n_frames;
      const double inv_std = 1.0 / std::sqrt(std::max(var, 1e-8));
      for (int t = 0; t < n_frames; ++t)
        feat.at(t, 0, b) = static_cast<float>((feat.at(t, 0, b) - mean) * inv_std);
    }
  }
  return feat;
}

}  // namespace

FeatureSequence mel_frontend(const Waveform& w, const MelOptions& opts) {
  return mel_spectrogram(w, opts, true);
}

FeatureSequence mel_frontend_raw(const Waveform& w, const MelOptions& opts) {
  return mel_spectrogram(w, opts, false);
}

}  // namespace si
