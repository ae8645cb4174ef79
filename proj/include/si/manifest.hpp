#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "si/common.hpp"

namespace si::train {

struct UtteranceEntry {
  std::string id;
  std::string speaker;
  std::string split;  // train | dev | test
  std::string feat_path;
  std::string target_path;
};

// Corpus index. Paths are stored relative to the manifest file and resolved
// against root_dir after loading. Splits must be speaker-disjoint.
struct Manifest {
  std::vector<UtteranceEntry> utterances;
  std::string frontend;  // feature source id ("mel40", "embed")
  int feat_layers = 0;   // 0 = unknown
  int feat_dim = 0;
  std::string root_dir;

  void validate() const;
  std::vector<const UtteranceEntry*> split(const std::string& name) const;
  std::string resolve(const std::string& rel) const;

  nlohmann::json to_json() const;
  static Manifest from_json(const nlohmann::json& j);
  static Manifest load(const std::string& path);
  void save(const std::string& path) const;
};

}  // namespace si::train
