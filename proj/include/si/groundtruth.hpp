#pragma once

#include <string>
#include <vector>

#include "si/waveform.hpp"

namespace si {

struct DualMicRecording {
  Waveform oral;
  Waveform nasal;
};

enum class SilencePolicy {
  Hold,     // hold previous valid nasalance; 0.5 before the first valid frame
  Neutral,  // fixed 0.5 raw (normalized 0) on silent frames
};

struct NasalanceOptions {
  double highpass_hz = 20.0;
  double window_ms = 25.0;
  SilencePolicy silence = SilencePolicy::Hold;
  // Relative energy-floor: frames with AEnasal+AEoral below this fraction of
  // the utterance maximum count as silence (-80 dB; safely above the ~1e-7
  // numeric noise of the windowed-RMS prefix sums).
  double energy_floor_rel = 1e-4;
  // Inter-channel calibration hook; the recording chain applies none.
  double nasal_gain = 1.0;
};

// Pipeline provenance recorded next to every ground-truth trajectory.
struct GroundTruthMeta {
  int filter_order = 4;
  double highpass_hz = 20.0;
  double window_ms = 25.0;
  std::string normalization;  // "fixed-unit" | "per-utterance"
  std::string silence_policy; // "hold" | "neutral" | "" (n/a)
  std::vector<std::string> warnings;
};

// Velopharyngeal trajectory from a dual-microphone recording:
// highpass -> windowed RMS per channel -> energy ratio per sample ->
// 100 Hz -> fixed [-1,1] map. Raw ratio is held in [0,1].
Trajectory compute_nasalance(const DualMicRecording& rec,
                             const NasalanceOptions& opts = {},
                             GroundTruthMeta* meta = nullptr);

// Glottal-activity trajectory from the EGG signal: highpass -> analytic
// envelope -> 100 Hz -> per-utterance min-max to [-1,1].
Trajectory compute_egg_envelope(const Waveform& egg, double highpass_hz = 20.0,
                                GroundTruthMeta* meta = nullptr);

// Trims or pads (edge-hold) every channel to len_frames. A discrepancy beyond
// 5% of len_frames is an alignment error. original_lengths, when given,
// receives the per-channel input lengths.
TvSet align_targets(const std::vector<Trajectory>& trajs, int len_frames,
                    std::vector<int>* original_lengths = nullptr);

}  // namespace si
