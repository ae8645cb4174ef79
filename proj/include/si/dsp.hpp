#pragma once

#include <vector>

#include "si/waveform.hpp"

namespace si::dsp {

// Deterministic 1-D primitives shared by the ground-truth and feature
// pipelines. All functions are pure; inputs are never modified.

// Zero-phase high-pass: 4th-order Butterworth applied forward-backward.
// Requires cutoff_hz < Nyquist.
Waveform highpass(const Waveform& w, double cutoff_hz);

// Zero-phase low-pass companion, used for anti-alias decimation.
Waveform lowpass(const Waveform& w, double cutoff_hz);

// Per-sample magnitude |x|. The RMS character of the energy measure comes
// from the rectangular window applied afterwards; see windowed_rms.
Waveform rms_energy(const Waveform& w);

// Centered rectangular moving average; edges average over the samples that
// exist (shrinking window). Errors if the window exceeds the signal.
Waveform moving_average(const Waveform& w, double window_ms);

// Number of samples in a rectangular window of window_ms at fs.
int ma_window_samples(double window_ms, double sample_rate_hz);

// sqrt(moving_average(x^2)): true windowed RMS, the energy measure used by
// the nasalance pipeline.
Waveform windowed_rms(const Waveform& w, double window_ms);

// Magnitude of the analytic signal, computed over the full utterance.
Waveform hilbert_envelope(const Waveform& w);

// Anti-alias low-pass (cutoff 0.45 * target) followed by linear interpolation
// at the target instants. Downsampling only; output length =
// round(duration_s * target_hz).
std::vector<double> resample_to(const Waveform& w, double target_hz);

enum class NormMode {
  FixedUnit,     // affine [0,1] -> [-1,1], i.e. v -> 2v - 1
  PerUtterance,  // min-max of this sequence -> [-1,1]
};

// Relative span below which a per-utterance sequence counts as constant and
// maps to all zeros. Generous enough to absorb filter edge ripple on a
// constant-amplitude tone; real envelopes swing far more than this.
inline constexpr double kDegenerateSpanRel = 0.02;

// Maps values into [-1, 1]. In PerUtterance mode a (near-)constant sequence
// maps to all zeros; *degenerate, when given, reports that this happened.
std::vector<double> normalize_pm1(const std::vector<double>& values, NormMode mode,
                                  bool* degenerate = nullptr);

}  // namespace si::dsp
