#include "si/synth.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "si/csv_io.hpp"
#include "si/feat_io.hpp"
#include "si/nn/core.hpp"
#include "si/waveform.hpp"

namespace si::train {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent deterministic stream per (seed, purpose, speaker, utterance).
nn::Rng stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t a = 0,
               std::uint64_t b = 0) {
  return nn::Rng(mix64(mix64(mix64(mix64(seed) ^ purpose) ^ (a + 1)) ^ (b + 1)));
}

constexpr int kSinusoids = 3;

struct SpeakerSig {
  // [latent][component]
  std::vector<std::array<double, kSinusoids>> freq, amp;
};

std::string utt_id(int spk, int utt) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "spk%02d_utt%02d", spk, utt);
  return buf;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n_speakers < 1 || utts_per_speaker < 1)
    fail(ErrorCategory::InvalidParameter, "corpus needs at least one speaker and utterance");
  if (train_speakers + dev_speakers + test_speakers != n_speakers)
    fail(ErrorCategory::Config, "speaker split sizes (" + std::to_string(train_speakers) + "+" +
                                    std::to_string(dev_speakers) + "+" +
                                    std::to_string(test_speakers) + ") must sum to " +
                                    std::to_string(n_speakers));
  if (train_speakers < 1 || dev_speakers < 1 || test_speakers < 1)
    fail(ErrorCategory::Config, "every split needs at least one speaker");
  if (!(duration_min_s > 0) || duration_max_s < duration_min_s)
    fail(ErrorCategory::InvalidParameter, "bad duration range");
  if (latent_dim < 1 || feat_layers < 1 || feat_dim < 1)
    fail(ErrorCategory::InvalidParameter, "latent/feature dims must be >= 1");
  if (noise_std < 0) fail(ErrorCategory::InvalidParameter, "noise_std must be >= 0");
}

nlohmann::json SyntheticSpec::to_json() const {
  return nlohmann::json{
      {"n_speakers", n_speakers},
      {"utts_per_speaker", utts_per_speaker},
      {"duration_min_s", duration_min_s},
      {"duration_max_s", duration_max_s},
      {"seed", seed},
      {"latent_dim", latent_dim},
      {"noise_std", noise_std},
      {"feat_layers", feat_layers},
      {"feat_dim", feat_dim},
      {"splits", {{"train", train_speakers}, {"dev", dev_speakers}, {"test", test_speakers}}},
  };
}

Manifest synth_corpus(const SyntheticSpec& spec, const std::string& out_dir) {
  spec.validate();
  namespace fs = std::filesystem;
  const fs::path root(out_dir);
  fs::create_directories(root / "feat");
  fs::create_directories(root / "targets");

  const int n_channels = static_cast<int>(kAllChannelNames.size());

  // Channel read-out directions in latent space, fixed by the corpus seed.
  nn::Rng chan_rng = stream(spec.seed, 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> w(static_cast<std::size_t>(n_channels),
                                     std::vector<double>(static_cast<std::size_t>(spec.latent_dim)));
  for (auto& wc : w) {
    double norm2 = 0;
    for (double& v : wc) {
      v = normal(chan_rng);
      norm2 += v * v;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : wc) v *= inv;
  }

  // Fixed feature projection per layer: feat = tanh(P y + b) + noise.
  nn::Rng proj_rng = stream(spec.seed, 2);
  std::vector<std::vector<double>> proj(static_cast<std::size_t>(spec.feat_layers));
  std::vector<std::vector<double>> bias(static_cast<std::size_t>(spec.feat_layers));
  for (int l = 0; l < spec.feat_layers; ++l) {
    auto& p = proj[static_cast<std::size_t>(l)];
    p.resize(static_cast<std::size_t>(spec.feat_dim) * n_channels);
    for (double& v : p) v = 0.55 * normal(proj_rng);
    auto& b = bias[static_cast<std::size_t>(l)];
    b.resize(static_cast<std::size_t>(spec.feat_dim));
    for (double& v : b) v = 0.1 * normal(proj_rng);
  }

  Manifest manifest;
  manifest.frontend = "embed";
  manifest.feat_layers = spec.feat_layers;
  manifest.feat_dim = spec.feat_dim;

  for (int spk = 0; spk < spec.n_speakers; ++spk) {
    // Per-speaker motion signature: base frequencies and amplitudes.
    nn::Rng spk_rng = stream(spec.seed, 3, static_cast<std::uint64_t>(spk));
    std::uniform_real_distribution<double> freq_d(0.2, 2.5), amp_d(0.3, 1.0);
    SpeakerSig sig;
    sig.freq.resize(static_cast<std::size_t>(spec.latent_dim));
    sig.amp.resize(static_cast<std::size_t>(spec.latent_dim));
    for (int j = 0; j < spec.latent_dim; ++j)
      for (int k = 0; k < kSinusoids; ++k) {
        sig.freq[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] = freq_d(spk_rng);
        sig.amp[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] = amp_d(spk_rng);
      }

    const std::string split = spk < spec.train_speakers                      ? "train"
                              : spk < spec.train_speakers + spec.dev_speakers ? "dev"
                                                                              : "test";

    for (int utt = 0; utt < spec.utts_per_speaker; ++utt) {
      nn::Rng utt_rng =
          stream(spec.seed, 4, static_cast<std::uint64_t>(spk), static_cast<std::uint64_t>(utt));
      std::uniform_real_distribution<double> dur_d(spec.duration_min_s, spec.duration_max_s);
      std::uniform_real_distribution<double> jit_d(0.9, 1.1), phase_d(0.0, 2.0 * M_PI);
      const double dur = dur_d(utt_rng);
      const int t50 = std::max(2, static_cast<int>(std::lround(dur * kFeatureRateHz)));
      const int t100 = 2 * t50;

      struct Component {
        double freq, amp, phase;
      };
      std::vector<std::array<Component, kSinusoids>> comps(
          static_cast<std::size_t>(spec.latent_dim));
      std::vector<double> amp_sum(static_cast<std::size_t>(spec.latent_dim), 0.0);
      for (int j = 0; j < spec.latent_dim; ++j)
        for (int k = 0; k < kSinusoids; ++k) {
          auto& c = comps[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
          c.freq = sig.freq[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] *
                   jit_d(utt_rng);
          c.amp = sig.amp[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] *
                  jit_d(utt_rng);
          c.phase = phase_d(utt_rng);
          amp_sum[static_cast<std::size_t>(j)] += c.amp;
        }

      // Targets at 100 Hz.
      std::vector<std::vector<double>> y(static_cast<std::size_t>(n_channels),
                                         std::vector<double>(static_cast<std::size_t>(t100)));
      std::vector<double> z(static_cast<std::size_t>(spec.latent_dim));
      for (int i = 0; i < t100; ++i) {
        const double t = static_cast<double>(i) / kTrajectoryRateHz;
        for (int j = 0; j < spec.latent_dim; ++j) {
          double v = 0;
          for (const auto& c : comps[static_cast<std::size_t>(j)])
            v += c.amp * std::sin(2.0 * M_PI * c.freq * t + c.phase);
          z[static_cast<std::size_t>(j)] = v / amp_sum[static_cast<std::size_t>(j)];
        }
        for (int c = 0; c < n_channels; ++c) {
          double dot = 0;
          for (int j = 0; j < spec.latent_dim; ++j)
            dot += w[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] *
                   z[static_cast<std::size_t>(j)];
          y[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] =
              0.95 * std::tanh(1.2 * dot);
        }
      }

      // Features at 50 Hz from the even target frames.
      FeatureSequence feat;
      feat.frames = t50;
      feat.layers = spec.feat_layers;
      feat.dim = spec.feat_dim;
      feat.data.resize(feat.expected_size());
      nn::Rng noise_rng =
          stream(spec.seed, 5, static_cast<std::uint64_t>(spk), static_cast<std::uint64_t>(utt));
      std::normal_distribution<double> noise_d(0.0, 1.0);
      for (int i = 0; i < t50; ++i) {
        for (int l = 0; l < spec.feat_layers; ++l) {
          const auto& p = proj[static_cast<std::size_t>(l)];
          const auto& b = bias[static_cast<std::size_t>(l)];
          for (int d = 0; d < spec.feat_dim; ++d) {
            double acc = b[static_cast<std::size_t>(d)];
            for (int c = 0; c < n_channels; ++c)
              acc += p[static_cast<std::size_t>(d) * n_channels + c] *
                     y[static_cast<std::size_t>(c)][static_cast<std::size_t>(2 * i)];
            double v = std::tanh(acc);
            if (spec.noise_std > 0) v += spec.noise_std * noise_d(noise_rng);
            feat.at(i, l, d) = static_cast<float>(v);
          }
        }
      }

      const std::string id = utt_id(spk, utt);
      const std::string feat_rel = "feat/" + id + ".feat";
      const std::string targ_rel = "targets/" + id + ".csv";
      write_feat((root / feat_rel).string(), feat);

      std::vector<Trajectory> trajs;
      trajs.reserve(static_cast<std::size_t>(n_channels));
      for (int c = 0; c < n_channels; ++c)
        trajs.push_back(Trajectory{kAllChannelNames[static_cast<std::size_t>(c)],
                                   y[static_cast<std::size_t>(c)], kTrajectoryRateHz});
      write_trajectory_csv((root / targ_rel).string(),
                           TrajectoryTable::from_trajectories(trajs));

      char spk_name[16];
      std::snprintf(spk_name, sizeof(spk_name), "spk%02d", spk);
      manifest.utterances.push_back({id, spk_name, split, feat_rel, targ_rel});
    }
  }

  manifest.root_dir = root.string();
  nlohmann::json mj = manifest.to_json();
  mj["generator"] = spec.to_json();
  std::ofstream out(root / "manifest.json", std::ios::trunc);
  if (!out) fail(ErrorCategory::Io, "cannot write manifest under " + out_dir);
  out << mj.dump(2) << "\n";
  if (!out) fail(ErrorCategory::Io, "manifest write failed under " + out_dir);
  manifest.validate();
  return manifest;
}

}  // namespace si::train
