#include "si/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

namespace si::train {

void Manifest::validate() const {
  if (utterances.empty()) fail(ErrorCategory::EmptyInput, "manifest has no utterances");
  static const std::set<std::string> kSplits = {"train", "dev", "test"};
  std::map<std::string, std::string> speaker_split;
  std::set<std::string> ids;
  for (const auto& u : utterances) {
    if (u.id.empty() || u.speaker.empty())
      fail(ErrorCategory::Format, "manifest entry missing id or speaker");
    if (!ids.insert(u.id).second)
      fail(ErrorCategory::Format, "duplicate utterance id '" + u.id + "' in manifest");
    if (!kSplits.count(u.split))
      fail(ErrorCategory::Format, "utterance '" + u.id + "' has unknown split '" + u.split + "'");
    auto [it, inserted] = speaker_split.emplace(u.speaker, u.split);
    if (!inserted && it->second != u.split)
      fail(ErrorCategory::Config, "speaker '" + u.speaker + "' appears in both '" + it->second +
                                      "' and '" + u.split + "' splits; splits must be speaker-disjoint");
  }
}

std::vector<const UtteranceEntry*> Manifest::split(const std::string& name) const {
  std::vector<const UtteranceEntry*> out;
  for (const auto& u : utterances)
    if (u.split == name) out.push_back(&u);
  return out;
}

std::string Manifest::resolve(const std::string& rel) const {
  std::filesystem::path p(rel);
  if (p.is_absolute() || root_dir.empty()) return rel;
  return (std::filesystem::path(root_dir) / p).string();
}

nlohmann::json Manifest::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& u : utterances)
    arr.push_back({{"id", u.id},
                   {"speaker", u.speaker},
                   {"split", u.split},
                   {"features", u.feat_path},
                   {"targets", u.target_path}});
  nlohmann::json j{{"utterances", arr}};
  if (!frontend.empty()) {
    j["frontend"] = frontend;
    j["feat_layers"] = feat_layers;
    j["feat_dim"] = feat_dim;
  }
  return j;
}

Manifest Manifest::from_json(const nlohmann::json& j) {
  Manifest m;
  try {
    for (const auto& e : j.at("utterances")) {
      UtteranceEntry u;
      u.id = e.at("id").get<std::string>();
      u.speaker = e.at("speaker").get<std::string>();
      u.split = e.at("split").get<std::string>();
      u.feat_path = e.at("features").get<std::string>();
      u.target_path = e.at("targets").get<std::string>();
      m.utterances.push_back(std::move(u));
    }
    m.frontend = j.value("frontend", std::string());
    m.feat_layers = j.value("feat_layers", 0);
    m.feat_dim = j.value("feat_dim", 0);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::Format, std::string("bad manifest: ") + e.what());
  }
  return m;
}

Manifest Manifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::Io, "cannot open manifest: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::Format, "manifest is not valid JSON (" + path + "): " + e.what());
  }
  Manifest m = from_json(j);
  m.root_dir = std::filesystem::path(path).parent_path().string();
  m.validate();
  return m;
}

void Manifest::save(const std::string& path) const {
  validate();
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCategory::Io, "cannot write manifest: " + path);
  out << to_json().dump(2) << "\n";
  if (!out) fail(ErrorCategory::Io, "write failed for manifest: " + path);
}

}  // namespace si::train
