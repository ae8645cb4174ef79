#pragma once

#include <string>
#include <vector>

#include "si/manifest.hpp"
#include "si/model.hpp"
#include "si/nn/core.hpp"

namespace si::train {

struct LoadedUtterance {
  std::string id;
  std::string speaker;
  nn::Mat<float> features;  // frames x (layers * dim), layer-major columns
  nn::Mat<float> targets;   // 2*frames x channels, ordered per model spec
};

// Loads one manifest split with features checked against the model's input
// geometry and target channels selected by name. Target rows are aligned to
// exactly twice the feature frame count (small drift trimmed or edge-padded,
// >5% rejected).
std::vector<LoadedUtterance> load_split(const Manifest& manifest, const std::string& split,
                                        const models::ModelSpec& spec);

// Geometry compatibility between a model and a manifest (frontend id when
// both declare one, feature layers/dim always).
void check_frontend_compatible(const models::ModelSpec& spec, const Manifest& manifest);

}  // namespace si::train
