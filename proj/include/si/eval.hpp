#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "si/dataset.hpp"
#include "si/manifest.hpp"
#include "si/model.hpp"
#include "si/nn/core.hpp"

namespace si::train {

enum class Protocol { Unsegmented, Segmented };

std::string to_string(Protocol p);

inline constexpr int kSegmentFrames = 200;       // 2 s at 100 Hz
inline constexpr int kSegmentKeepMinFrames = 100;  // trailing-piece keep threshold

struct EvalReport {
  Protocol protocol = Protocol::Unsegmented;
  int segment_frames = kSegmentFrames;
  std::vector<std::string> channel_names;
  std::vector<double> channel_ppmc;
  bool has_mean_oral = false;
  double mean_oral = 0.0;
  std::size_t utterance_count = 0;
  std::size_t segment_count = 0;  // segmented protocol only
  std::vector<std::string> warnings;

  double ppmc(const std::string& channel) const;
  nlohmann::json to_json() const;
};

// Segment boundaries for one utterance: complete segment_frames-sized pieces
// plus the trailing piece when it is at least half a segment or is the only
// piece (so a short utterance evaluates identically under both protocols).
std::vector<std::pair<int, int>> segment_bounds(int frames,
                                                int segment_frames = kSegmentFrames);

// Metric core over (prediction, target) pairs; both matrices are
// frames x channels at 100 Hz. Constant channels score 0 with a warning.
EvalReport evaluate_pairs(const std::vector<nn::Mat<double>>& preds,
                          const std::vector<nn::Mat<double>>& targets,
                          const std::vector<std::string>& channel_names, Protocol protocol,
                          int segment_frames = kSegmentFrames);

// Runs the model over a manifest split in eval mode and scores it.
EvalReport evaluate_model(const models::Model<float>& model, const Manifest& manifest,
                          const std::string& split, Protocol protocol,
                          int segment_frames = kSegmentFrames);
EvalReport evaluate_loaded(const models::Model<float>& model,
                           const std::vector<LoadedUtterance>& data, Protocol protocol,
                           int segment_frames = kSegmentFrames);

}  // namespace si::train
