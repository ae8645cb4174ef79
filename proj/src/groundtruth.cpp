#include "si/groundtruth.hpp"

#include <algorithm>
#include <cmath>

#include "si/dsp.hpp"

namespace si {

namespace {

void require_min_duration(const Waveform& w, double min_s, const char* what) {
  w.require_nonempty(what);
  if (w.duration_s() < min_s)
    fail(ErrorCategory::InvalidParameter,
         std::string(what) + ": need at least " + std::to_string(min_s) + " s, got " +
             std::to_string(w.duration_s()) + " s");
}

}  // namespace

Trajectory compute_nasalance(const DualMicRecording& rec, const NasalanceOptions& opts,
                             GroundTruthMeta* meta) {
  if (rec.oral.sample_rate_hz != rec.nasal.sample_rate_hz)
    fail(ErrorCategory::InvalidInput, "compute_nasalance: oral/nasal sample rates differ");
  require_min_duration(rec.oral, 0.1, "compute_nasalance oral");
  require_min_duration(rec.nasal, 0.1, "compute_nasalance nasal");

  const std::size_t len_diff = rec.oral.size() > rec.nasal.size()
                                   ? rec.oral.size() - rec.nasal.size()
                                   : rec.nasal.size() - rec.oral.size();
  if (len_diff > 1)
    fail(ErrorCategory::InvalidInput,
         "compute_nasalance: channel lengths differ by " + std::to_string(len_diff) +
             " samples (only 1 tolerated)");
  const std::size_t n = std::min(rec.oral.size(), rec.nasal.size());

  Waveform oral(std::vector<double>(rec.oral.samples.begin(), rec.oral.samples.begin() + n),
                rec.oral.sample_rate_hz);
  Waveform nasal(std::vector<double>(rec.nasal.samples.begin(), rec.nasal.samples.begin() + n),
                 rec.nasal.sample_rate_hz);

  Waveform e_oral = dsp::windowed_rms(dsp::highpass(oral, opts.highpass_hz), opts.window_ms);
  Waveform e_nasal = dsp::windowed_rms(dsp::highpass(nasal, opts.highpass_hz), opts.window_ms);
  if (opts.nasal_gain != 1.0)
    for (double& v : e_nasal.samples) v *= opts.nasal_gain;

  double max_total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    max_total = std::max(max_total, e_nasal.samples[i] + e_oral.samples[i]);
  const double floor = opts.energy_floor_rel * max_total;

  Waveform ratio(std::vector<double>(n), oral.sample_rate_hz);
  double held = 0.5;
  bool any_valid = false;
  for (std::size_t i = 0; i < n; ++i) {
    const double denom = e_nasal.samples[i] + e_oral.samples[i];
    if (denom <= floor || denom <= 0.0) {
      ratio.samples[i] = opts.silence == SilencePolicy::Hold ? held : 0.5;
    } else {
      held = e_nasal.samples[i] / denom;
      ratio.samples[i] = held;
      any_valid = true;
    }
  }

  std::vector<double> raw = dsp::resample_to(ratio, kTrajectoryRateHz);
  for (double& v : raw) v = std::clamp(v, 0.0, 1.0);

  Trajectory out;
  out.name = "VP";
  out.rate_hz = kTrajectoryRateHz;
  out.values = dsp::normalize_pm1(raw, dsp::NormMode::FixedUnit);

  if (meta) {
    meta->highpass_hz = opts.highpass_hz;
    meta->window_ms = opts.window_ms;
    meta->normalization = "fixed-unit";
    meta->silence_policy = opts.silence == SilencePolicy::Hold ? "hold" : "neutral";
    if (!any_valid) meta->warnings.push_back("all frames below energy floor (silent recording)");
  }
  return out;
}

Trajectory compute_egg_envelope(const Waveform& egg, double highpass_hz,
                                GroundTruthMeta* meta) {
  require_min_duration(egg, 0.1, "compute_egg_envelope");

  Waveform env = dsp::hilbert_envelope(dsp::highpass(egg, highpass_hz));
  std::vector<double> raw = dsp::resample_to(env, kTrajectoryRateHz);

  // The analytic-signal construction rings over the first/last few frames of
  // a finite utterance, so the near-constant decision looks at the central
  // span only; a flat envelope would otherwise escape detection on edge
  // ripple alone.
  const std::size_t trim = std::min<std::size_t>(5, raw.size() / 4);
  const auto [mn_it, mx_it] =
      std::minmax_element(raw.begin() + trim, raw.end() - trim);
  const double scale = std::max({std::abs(*mn_it), std::abs(*mx_it), 1e-12});
  bool degenerate = (*mx_it - *mn_it) <= dsp::kDegenerateSpanRel * scale;

  Trajectory out;
  out.name = "EGGenv";
  out.rate_hz = kTrajectoryRateHz;
  if (degenerate) {
    out.values.assign(raw.size(), 0.0);
  } else {
    out.values = dsp::normalize_pm1(raw, dsp::NormMode::PerUtterance);
  }

  if (meta) {
    meta->highpass_hz = highpass_hz;
    meta->window_ms = 0.0;
    meta->normalization = "per-utterance";
    meta->silence_policy = "";
    if (degenerate)
      meta->warnings.push_back("near-constant envelope mapped to zero (degenerate normalization)");
  }
  return out;
}

TvSet align_targets(const std::vector<Trajectory>& trajs, int len_frames,
                    std::vector<int>* original_lengths) {
  if (len_frames <= 0)
    fail(ErrorCategory::InvalidParameter, "align_targets: len_frames must be positive");
  TvSet out;
  if (original_lengths) original_lengths->clear();
  for (const auto& t : trajs) {
    if (t.rate_hz != kTrajectoryRateHz)
      fail(ErrorCategory::InvalidInput,
           "align_targets: channel " + t.name + " is not at 100 Hz");
    const int len = static_cast<int>(t.values.size());
    if (original_lengths) original_lengths->push_back(len);
    if (std::abs(len - len_frames) > 0.05 * len_frames)
      fail(ErrorCategory::Alignment,
           "align_targets: channel " + t.name + " has " + std::to_string(len) +
               " frames, target " + std::to_string(len_frames) + " (>5% off)");
    Trajectory a;
    a.name = t.name;
    a.rate_hz = t.rate_hz;
    a.values.assign(t.values.begin(),
                    t.values.begin() + std::min(len, len_frames));
    if (len < len_frames && len > 0)
      a.values.resize(len_frames, t.values.back());
    out.channels.push_back(std::move(a));
  }
  return out;
}

}  // namespace si
