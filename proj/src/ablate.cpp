#include "si/ablate.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace si::train {

std::vector<std::pair<std::string, std::vector<std::string>>> ablation_family() {
  std::vector<std::string> oral(kOralTvNames.begin(), kOralTvNames.end());
  auto with = [&](std::initializer_list<std::string> extra) {
    std::vector<std::string> v = oral;
    v.insert(v.end(), extra.begin(), extra.end());
    return v;
  };
  return {
      {"oral", oral},
      {"oral+VP", with({"VP"})},
      {"oral+3SF", with({"Per", "Ap", "F0"})},
      {"all", with({"VP", "Per", "Ap", "F0"})},
  };
}

void check_ablation_exclusions(const std::set<std::string>& excluded) {
  for (const auto& name : excluded) {
    if (name == "VP" || name == "3SF") continue;
    if (std::find(kOralTvNames.begin(), kOralTvNames.end(), name) != kOralTvNames.end())
      fail(ErrorCategory::Config, "oral channel '" + name + "' cannot be ablated");
    fail(ErrorCategory::Config, "unknown ablation target '" + name + "' (allowed: VP, 3SF)");
  }
}

AblationResult run_ablation(const Manifest& manifest, const models::ModelSpec& base,
                            const TrainConfig& cfg, std::ostream* log,
                            const std::set<std::string>* excluded) {
  std::string only_label;
  if (excluded) {
    check_ablation_exclusions(*excluded);
    const bool no_vp = excluded->count("VP") > 0;
    const bool no_sf = excluded->count("3SF") > 0;
    only_label = no_vp && no_sf ? "oral" : no_vp ? "oral+3SF" : no_sf ? "oral+VP" : "all";
  }
  AblationResult result;
  for (const auto& [label, channels] : ablation_family()) {
    if (excluded && label != only_label) continue;
    models::ModelSpec spec = base;
    spec.channels = channels;
    spec.arch = channels.size() == kOralTvNames.size() ? models::Arch::StlSi : models::Arch::MtlSi;
    if (log) *log << "ablation variant '" << label << "' (" << channels.size() << " channels)\n";
    models::Model<float> model(spec);
    const TrainResult tr = train_model(model, manifest, cfg, log);

    AblationVariant v;
    v.label = label;
    v.channels = channels;
    v.arch = spec.arch;
    v.test_unsegmented = evaluate_model(model, manifest, "test", Protocol::Unsegmented);
    v.test_segmented = evaluate_model(model, manifest, "test", Protocol::Segmented);
    v.best_dev_loss = tr.best_dev_loss;
    v.epochs_trained = tr.meta.epochs_trained;
    result.variants.push_back(std::move(v));
  }
  return result;
}

nlohmann::json AblationResult::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& v : variants) {
    rows.push_back({
        {"label", v.label},
        {"channels", v.channels},
        {"arch", models::to_string(v.arch)},
        {"epochs_trained", v.epochs_trained},
        {"best_dev_loss", v.best_dev_loss},
        {"test_unsegmented", v.test_unsegmented.to_json()},
        {"test_segmented", v.test_segmented.to_json()},
    });
  }
  return nlohmann::json{{"variants", rows}};
}

std::string AblationResult::to_table() const {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %-9s %8s %14s %12s\n", "variant", "arch", "channels",
                "mean-oral(unseg)", "mean-oral(seg)");
  os << line;
  for (const auto& v : variants) {
    std::snprintf(line, sizeof(line), "%-10s %-9s %8zu %14.4f %12.4f\n", v.label.c_str(),
                  models::to_string(v.arch).c_str(), v.channels.size(),
                  v.test_unsegmented.mean_oral, v.test_segmented.mean_oral);
    os << line;
  }
  return os.str();
}

}  // namespace si::train
