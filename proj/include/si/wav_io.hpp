#pragma once

#include <string>
#include <vector>

#include "si/waveform.hpp"

namespace si {

struct WavData {
  double sample_rate_hz = 0.0;
  std::vector<std::vector<double>> channels;

  Waveform mono() const;  // requires exactly one channel
  Waveform channel(std::size_t idx) const;
};

// Reads mono or multi-channel PCM WAV, 16-bit int or 32-bit float, any rate.
WavData read_wav(const std::string& path);

// Writes a mono 32-bit float WAV (test fixtures and intermediate dumps).
void write_wav(const std::string& path, const Waveform& w);

}  // namespace si
