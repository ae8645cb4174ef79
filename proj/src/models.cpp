#include "si/model.hpp"

#include <algorithm>

namespace si::models {

std::string to_string(Arch a) {
  switch (a) {
    case Arch::NasalSi: return "nasal-si";
    case Arch::StlSi: return "stl-si";
    case Arch::MtlSi: return "mtl-si";
  }
  fail(ErrorCategory::InvalidParameter, "unknown architecture value");
}

Arch arch_from_string(const std::string& s) {
  if (s == "nasal-si") return Arch::NasalSi;
  if (s == "stl-si") return Arch::StlSi;
  if (s == "mtl-si") return Arch::MtlSi;
  fail(ErrorCategory::Config, "unknown architecture '" + s + "' (expected nasal-si, stl-si or mtl-si)");
}

void ModelSpec::set_default_channels() {
  channels.clear();
  switch (arch) {
    case Arch::NasalSi:
      channels = {"VP", "EGGenv", "Per", "Ap", "F0"};
      break;
    case Arch::StlSi:
    case Arch::MtlSi:
      channels.assign(kOralTvNames.begin(), kOralTvNames.end());
      for (const auto& n : kVpSfNames) channels.push_back(n);
      break;
  }
}

int ModelSpec::oral_head_dim() const {
  return arch == Arch::MtlSi ? kOralChannelCount : 0;
}

int ModelSpec::source_head_dim() const {
  return arch == Arch::MtlSi ? static_cast<int>(channels.size()) - kOralChannelCount : 0;
}

void ModelSpec::validate() const {
  if (!(width_scale > 0) || !std::isfinite(width_scale))
    fail(ErrorCategory::Config, "width_scale must be a positive finite number");
  if (feat_layers < 1) fail(ErrorCategory::Config, "feature layer count must be >= 1");
  if (feat_dim < 1) fail(ErrorCategory::Config, "feature dim must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) fail(ErrorCategory::Config, "dropout must be in [0, 1)");
  if (channels.empty()) fail(ErrorCategory::Config, "model has no output channels");
  switch (arch) {
    case Arch::NasalSi: {
      const std::vector<std::string> want = {"VP", "EGGenv", "Per", "Ap", "F0"};
      if (channels != want)
        fail(ErrorCategory::Config, "nasal-si output channels are fixed to VP, EGGenv, Per, Ap, F0");
      break;
    }
    case Arch::StlSi:
      break;
    case Arch::MtlSi: {
      if (static_cast<int>(channels.size()) <= kOralChannelCount)
        fail(ErrorCategory::Config,
             "mtl-si needs the 6 oral channels plus at least one source channel");
      for (int i = 0; i < kOralChannelCount; ++i)
        if (channels[static_cast<std::size_t>(i)] != kOralTvNames[static_cast<std::size_t>(i)])
          fail(ErrorCategory::Config,
               "mtl-si head-1 must cover the 6 oral channels in canonical order");
      break;
    }
  }
}

nlohmann::json ModelSpec::to_json() const {
  return nlohmann::json{
      {"arch", to_string(arch)},
      {"width_scale", width_scale},
      {"frontend", frontend},
      {"feat_layers", feat_layers},
      {"feat_dim", feat_dim},
      {"seed", seed},
      {"fusion_raw", fusion_raw},
      {"upsample_repeat", upsample_repeat},
      {"dropout", dropout},
      {"channels", channels},
  };
}

ModelSpec ModelSpec::from_json(const nlohmann::json& j) {
  ModelSpec s;
  try {
    s.arch = arch_from_string(j.at("arch").get<std::string>());
    s.width_scale = j.at("width_scale").get<double>();
    s.frontend = j.at("frontend").get<std::string>();
    s.feat_layers = j.at("feat_layers").get<int>();
    s.feat_dim = j.at("feat_dim").get<int>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.fusion_raw = j.at("fusion_raw").get<bool>();
    s.upsample_repeat = j.at("upsample_repeat").get<bool>();
    s.dropout = j.at("dropout").get<double>();
    s.channels = j.at("channels").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::Format, std::string("bad model spec: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace si::models
