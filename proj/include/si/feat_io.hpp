#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "si/common.hpp"

namespace si {

// 50 Hz frame-level feature block: frames x layers x dim, row-major f32.
struct FeatureSequence {
  int frames = 0;
  int layers = 0;
  int dim = 0;
  float frame_rate_hz = 50.0f;
  std::vector<float> data;  // [frame][layer][dim]

  float& at(int f, int l, int d) {
    return data[(static_cast<std::size_t>(f) * layers + l) * dim + d];
  }
  float at(int f, int l, int d) const {
    return data[(static_cast<std::size_t>(f) * layers + l) * dim + d];
  }
  std::size_t expected_size() const {
    return static_cast<std::size_t>(frames) * layers * dim;
  }
  void validate(const char* what) const;
};

// FEAT binary: "FEAT" | version u32=1 | frame_rate_hz f32 | frames u32 |
// layers u32 | dim u32 | payload f32 little-endian.
void write_feat(const std::string& path, const FeatureSequence& f);
FeatureSequence read_feat(const std::string& path);

inline constexpr uint32_t kFeatVersion = 1;

}  // namespace si
