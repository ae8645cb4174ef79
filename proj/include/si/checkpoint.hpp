#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "si/model.hpp"
#include "si/nn/adam.hpp"

namespace si::models {

// Training provenance carried inside the checkpoint's JSON header. Everything
// here is deterministic for a fixed seed and corpus — no wall-clock state —
// so identical runs produce byte-identical files.
struct CheckpointMeta {
  int epochs_trained = 0;
  int best_epoch = -1;  // 1-based epoch whose weights are stored; -1 = untrained
  std::vector<double> train_loss_history;
  std::vector<double> dev_loss_history;
  std::vector<double> dev_mean_oral_history;  // empty when no oral channels
  std::int64_t opt_step = 0;
  nlohmann::json extra;  // free-form flags (gate convention, notes)

  nlohmann::json to_json() const;
  static CheckpointMeta from_json(const nlohmann::json& j);
};

struct LoadedCheckpoint {
  ModelSpec spec;
  CheckpointMeta meta;
  std::unique_ptr<Model<float>> model;
  // Optimizer moments keyed by parameter name; empty when not saved.
  std::map<std::string, nn::Mat<float>> opt_m, opt_v;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, Model<float>& model, const CheckpointMeta& meta,
                     nn::Adam<float>* opt = nullptr);
LoadedCheckpoint load_checkpoint(const std::string& path);

// Restores saved optimizer moments into a freshly attached optimizer.
void restore_optimizer(nn::Adam<float>& opt, const LoadedCheckpoint& ck);

}  // namespace si::models
