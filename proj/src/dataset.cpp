#include "si/dataset.hpp"

#include <cstring>

#include "si/csv_io.hpp"
#include "si/feat_io.hpp"
#include "si/groundtruth.hpp"

namespace si::train {

void check_frontend_compatible(const models::ModelSpec& spec, const Manifest& manifest) {
  if (!manifest.frontend.empty() && !spec.frontend.empty() &&
      manifest.frontend != spec.frontend)
    fail(ErrorCategory::Config, "model expects frontend '" + spec.frontend +
                                    "' but manifest provides '" + manifest.frontend + "'");
  if (manifest.feat_layers > 0 &&
      (manifest.feat_layers != spec.feat_layers || manifest.feat_dim != spec.feat_dim))
    fail(ErrorCategory::Config,
         "model expects " + std::to_string(spec.feat_layers) + "x" +
             std::to_string(spec.feat_dim) + " features but manifest provides " +
             std::to_string(manifest.feat_layers) + "x" + std::to_string(manifest.feat_dim));
}

std::vector<LoadedUtterance> load_split(const Manifest& manifest, const std::string& split,
                                        const models::ModelSpec& spec) {
  manifest.validate();
  check_frontend_compatible(spec, manifest);
  const auto entries = manifest.split(split);
  if (entries.empty())
    fail(ErrorCategory::Config, "manifest split '" + split + "' is empty");

  std::vector<LoadedUtterance> out;
  out.reserve(entries.size());
  for (const UtteranceEntry* e : entries) {
    const FeatureSequence feat = read_feat(manifest.resolve(e->feat_path));
    if (static_cast<int>(feat.layers) != spec.feat_layers ||
        static_cast<int>(feat.dim) != spec.feat_dim)
      fail(ErrorCategory::Config, "utterance '" + e->id + "': features are " +
                                      std::to_string(feat.layers) + "x" +
                                      std::to_string(feat.dim) + " but the model expects " +
                                      std::to_string(spec.feat_layers) + "x" +
                                      std::to_string(spec.feat_dim));

    LoadedUtterance u;
    u.id = e->id;
    u.speaker = e->speaker;
    u.features.resize(feat.frames, static_cast<Eigen::Index>(feat.layers * feat.dim));
    std::memcpy(u.features.data(), feat.data.data(), sizeof(float) * feat.data.size());

    const TrajectoryTable table = read_trajectory_csv(manifest.resolve(e->target_path));
    std::vector<Trajectory> wanted;
    wanted.reserve(spec.channels.size());
    for (const auto& name : spec.channels) {
      const int col = table.column_index(name);
      if (col < 0)
        fail(ErrorCategory::Config, "utterance '" + e->id + "': target CSV lacks channel '" +
                                        name + "'");
      Trajectory t;
      t.name = name;
      t.values = table.columns[static_cast<std::size_t>(col)];
      wanted.push_back(std::move(t));
    }
    const int want_rows = 2 * static_cast<int>(feat.frames);
    const TvSet aligned = align_targets(wanted, want_rows);
    u.targets.resize(want_rows, static_cast<Eigen::Index>(spec.channels.size()));
    for (std::size_t c = 0; c < aligned.channels.size(); ++c)
      for (int t = 0; t < want_rows; ++t)
        u.targets(t, static_cast<Eigen::Index>(c)) =
            static_cast<float>(aligned.channels[c].values[static_cast<std::size_t>(t)]);
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace si::train
