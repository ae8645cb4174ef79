#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "si/manifest.hpp"

namespace si::train {

// Desk-scale corpus with known structure: smooth latent motions drive all
// target channels, and features are a fixed nonlinear projection of the
// (frame-rate-halved) targets plus noise — so inversion is well posed and a
// competent regressor can approach PPMC 1 as noise_std -> 0.
struct SyntheticSpec {
  int n_speakers = 24;
  int utts_per_speaker = 10;
  double duration_min_s = 3.0;
  double duration_max_s = 5.0;
  std::uint64_t seed = 1;
  int latent_dim = 6;
  double noise_std = 0.02;
  int feat_layers = 3;
  int feat_dim = 64;
  int train_speakers = 20;
  int dev_speakers = 2;
  int test_speakers = 2;

  void validate() const;
  nlohmann::json to_json() const;
};

// Generates FEAT + target-CSV files plus manifest.json under out_dir and
// returns the manifest. Deterministic function of the spec.
Manifest synth_corpus(const SyntheticSpec& spec, const std::string& out_dir);

}  // namespace si::train
