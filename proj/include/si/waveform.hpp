#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "si/common.hpp"

namespace si {

// Uniformly sampled audio/EGG channel.
struct Waveform {
  std::vector<double> samples;
  double sample_rate_hz = 0.0;

  Waveform() = default;
  Waveform(std::vector<double> s, double rate)
      : samples(std::move(s)), sample_rate_hz(rate) {}

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
  }

  void require_nonempty(const char* op) const {
    if (samples.empty())
      fail(ErrorCategory::EmptyInput, std::string(op) + ": waveform is empty");
  }
  void require_finite(const char* op) const {
    for (double v : samples)
      if (!std::isfinite(v))
        fail(ErrorCategory::Numeric, std::string(op) + ": non-finite sample");
  }
};

// Named 100 Hz time series in [-1, 1].
struct Trajectory {
  std::string name;
  std::vector<double> values;
  double rate_hz = 100.0;

  std::size_t size() const { return values.size(); }
};

inline constexpr double kTrajectoryRateHz = 100.0;
inline constexpr double kFeatureRateHz = 50.0;

// Canonical channel names. Oral TVs first, then the VP/source group, then the
// EGG envelope.
inline const std::array<std::string, 6> kOralTvNames = {
    "LA", "LP", "TBCL", "TBCD", "TTCL", "TTCD"};
inline const std::array<std::string, 4> kVpSfNames = {"VP", "Per", "Ap", "F0"};
inline const std::array<std::string, 11> kAllChannelNames = {
    "LA", "LP", "TBCL", "TBCD", "TTCL", "TTCD", "VP", "Per", "Ap", "F0", "EGGenv"};

// Ordered bundle of target/estimate channels.
struct TvSet {
  std::vector<Trajectory> channels;

  const Trajectory* find(const std::string& name) const {
    for (const auto& t : channels)
      if (t.name == name) return &t;
    return nullptr;
  }
};

}  // namespace si
