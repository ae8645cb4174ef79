#pragma once

#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "si/checkpoint.hpp"
#include "si/dataset.hpp"
#include "si/loss.hpp"
#include "si/manifest.hpp"
#include "si/model.hpp"

namespace si::train {

struct TrainConfig {
  int batch_size = 8;
  int max_epochs = 50;
  int patience = 8;
  float lr = 5e-4f;
  double alpha = 0.8;
  // MTL head loss blend; ignored for single-head architectures.
  double head_weight_oral = 0.5;
  double head_weight_source = 0.5;
  std::uint64_t seed = 1;  // batch shuffling and dropout
  bool save_optimizer = false;
};

// Strict-improvement early stopping: stop once the dev loss has not improved
// for `patience` consecutive epochs; the best epoch's weights are what the
// trainer keeps.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {
    if (patience < 1) fail(ErrorCategory::InvalidParameter, "patience must be >= 1");
  }

  // Records one epoch's dev loss; returns true when it is a new best.
  bool observe(double dev_loss) {
    ++epoch_;
    if (dev_loss < best_) {
      best_ = dev_loss;
      best_epoch_ = epoch_;
      since_best_ = 0;
      return true;
    }
    ++since_best_;
    return false;
  }

  bool should_stop() const { return since_best_ >= patience_; }
  int best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_; }
  int epochs_seen() const { return epoch_; }

 private:
  int patience_;
  int epoch_ = 0;
  int best_epoch_ = -1;
  int since_best_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

struct TrainResult {
  models::CheckpointMeta meta;
  double best_dev_loss = 0.0;
};

// Trains in place; on return the model holds the best-dev-epoch weights
// (including batch-norm running statistics). Optimizer state for checkpoint
// persistence is exposed through the returned meta plus the optional opt
// out-param.
TrainResult train_model(models::Model<float>& model, const Manifest& manifest,
                        const TrainConfig& cfg, std::ostream* log = nullptr,
                        nn::Adam<float>* opt_out = nullptr);

// Loss over a batch with the MTL head split applied when the model has two
// heads; single-head models use the plain blended loss.
double batch_loss(const models::ModelSpec& spec, const TrainConfig& cfg,
                  const nn::SeqBatch<float>& pred, const nn::SeqBatch<float>& target,
                  nn::SeqBatch<float>* grad);

}  // namespace si::train
