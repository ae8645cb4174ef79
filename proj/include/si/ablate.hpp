#pragma once

#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "si/eval.hpp"
#include "si/manifest.hpp"
#include "si/trainer.hpp"

namespace si::train {

struct AblationVariant {
  std::string label;                       // e.g. "oral+VP"
  std::vector<std::string> channels;       // model output channels
  models::Arch arch = models::Arch::MtlSi; // StlSi when only oral channels remain
  EvalReport test_unsegmented;
  EvalReport test_segmented;
  double best_dev_loss = 0.0;
  int epochs_trained = 0;
};

struct AblationResult {
  std::vector<AblationVariant> variants;
  nlohmann::json to_json() const;
  std::string to_table() const;  // aligned text comparison table
};

// Trains and evaluates the source-channel ablation family:
// {oral only}, {oral+VP}, {oral+3SF}, {all}. When `excluded` is non-null the
// single variant obtained by removing those channels is trained instead
// (excluded {VP,3SF} -> oral-only as a single-head model; excluded {} -> the
// full model). Excluding oral channels is rejected.
AblationResult run_ablation(const Manifest& manifest, const models::ModelSpec& base,
                            const TrainConfig& cfg, std::ostream* log = nullptr,
                            const std::set<std::string>* excluded = nullptr);

// Channel lists for the four canonical variants, in presentation order.
std::vector<std::pair<std::string, std::vector<std::string>>> ablation_family();

void check_ablation_exclusions(const std::set<std::string>& excluded);

}  // namespace si::train
