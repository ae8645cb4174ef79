#pragma once

#include <vector>

#include "si/feat_io.hpp"
#include "si/waveform.hpp"

namespace si {

struct MelOptions {
  int bands = 40;
  double window_ms = 25.0;
  double hop_ms = 20.0;  // 50 Hz frame rate
  double sample_rate_hz = 16000.0;
  double fmin_hz = 0.0;
  double fmax_hz = 8000.0;
};

// Log-mel filterbank frontend with per-utterance per-band mean/variance
// normalization. Stand-in for externally computed SSL embeddings, so the
// output is a single-layer FeatureSequence at 50 Hz.
FeatureSequence mel_frontend(const Waveform& w, const MelOptions& opts = {});

// Same pipeline without the normalization step (band-energy inspection).
FeatureSequence mel_frontend_raw(const Waveform& w, const MelOptions& opts = {});

// Triangle band edges in Hz: bands+2 points evenly spaced on the mel scale.
std::vector<double> mel_band_edges_hz(int bands, double fmin_hz, double fmax_hz);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

inline constexpr const char* kMelFrontendId = "mel40";

}  // namespace si
