#include "si/eval.hpp"

#include <algorithm>
#include <cmath>

#include "si/loss.hpp"

namespace si::train {

std::string to_string(Protocol p) {
  return p == Protocol::Unsegmented ? "unsegmented" : "segmented-2s";
}

double EvalReport::ppmc(const std::string& channel) const {
  for (std::size_t i = 0; i < channel_names.size(); ++i)
    if (channel_names[i] == channel) return channel_ppmc[i];
  fail(ErrorCategory::InvalidParameter, "report has no channel '" + channel + "'");
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json per_channel = nlohmann::json::object();
  for (std::size_t i = 0; i < channel_names.size(); ++i)
    per_channel[channel_names[i]] = channel_ppmc[i];
  nlohmann::json j{
      {"protocol", to_string(protocol)},
      {"channel_order", channel_names},
      {"ppmc", per_channel},
      {"utterance_count", utterance_count},
      {"warnings", warnings},
      {"segment_rule",
       {{"segment_frames", segment_frames}, {"keep_min_frames", segment_frames / 2}}},
  };
  if (protocol == Protocol::Segmented) j["segment_count"] = segment_count;
  if (has_mean_oral) j["mean_oral"] = mean_oral;
  return j;
}

std::vector<std::pair<int, int>> segment_bounds(int frames, int segment_frames) {
  if (frames <= 0) fail(ErrorCategory::EmptyInput, "cannot segment an empty utterance");
  if (segment_frames < 2) fail(ErrorCategory::InvalidParameter, "segment length must be >= 2 frames");
  std::vector<std::pair<int, int>> out;
  const int full = frames / segment_frames;
  for (int i = 0; i < full; ++i) out.emplace_back(i * segment_frames, (i + 1) * segment_frames);
  const int rem = frames - full * segment_frames;
  if (rem > 0 && (rem >= segment_frames / 2 || full == 0))
    out.emplace_back(full * segment_frames, frames);
  return out;
}

EvalReport evaluate_pairs(const std::vector<nn::Mat<double>>& preds,
                          const std::vector<nn::Mat<double>>& targets,
                          const std::vector<std::string>& channel_names, Protocol protocol,
                          int segment_frames) {
  if (preds.size() != targets.size())
    fail(ErrorCategory::Shape, "evaluate: prediction/target count mismatch");
  if (preds.empty()) fail(ErrorCategory::Config, "evaluate: no utterances to score");
  const auto channels = static_cast<Eigen::Index>(channel_names.size());
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i].rows() != targets[i].rows() || preds[i].cols() != channels ||
        targets[i].cols() != channels)
      fail(ErrorCategory::Shape, "evaluate: shape mismatch in utterance " + std::to_string(i));

  EvalReport rep;
  rep.protocol = protocol;
  rep.segment_frames = segment_frames;
  rep.channel_names = channel_names;
  rep.channel_ppmc.assign(channel_names.size(), 0.0);
  rep.utterance_count = preds.size();

  std::vector<double> sums(channel_names.size(), 0.0);
  std::size_t pieces = 0;
  std::size_t constant_pieces = 0;

  auto score_piece = [&](const nn::Mat<double>& p, const nn::Mat<double>& t, int lo, int hi) {
    const int n = hi - lo;
    std::vector<double> x(static_cast<std::size_t>(n)), y(static_cast<std::size_t>(n));
    for (Eigen::Index c = 0; c < channels; ++c) {
      for (int k = 0; k < n; ++k) {
        x[static_cast<std::size_t>(k)] = p(lo + k, c);
        y[static_cast<std::size_t>(k)] = t(lo + k, c);
      }
      if (!pearson_defined(x, y)) ++constant_pieces;
      sums[static_cast<std::size_t>(c)] += pearson(x, y);
    }
    ++pieces;
  };

  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int frames = static_cast<int>(preds[i].rows());
    if (protocol == Protocol::Unsegmented) {
      score_piece(preds[i], targets[i], 0, frames);
    } else {
      for (const auto& [lo, hi] : segment_bounds(frames, segment_frames))
        score_piece(preds[i], targets[i], lo, hi);
    }
  }
  if (pieces == 0) fail(ErrorCategory::Degenerate, "evaluate: no scorable segments");
  for (std::size_t c = 0; c < sums.size(); ++c)
    rep.channel_ppmc[c] = sums[c] / static_cast<double>(pieces);
  if (protocol == Protocol::Segmented) rep.segment_count = pieces;
  if (constant_pieces > 0)
    rep.warnings.push_back(std::to_string(constant_pieces) +
                           " channel segment(s) had zero variance; scored as 0");

  bool all_oral = true;
  double oral_sum = 0.0;
  for (const auto& name : kOralTvNames) {
    const auto it = std::find(channel_names.begin(), channel_names.end(), name);
    if (it == channel_names.end()) {
      all_oral = false;
      break;
    }
    oral_sum += rep.channel_ppmc[static_cast<std::size_t>(it - channel_names.begin())];
  }
  if (all_oral) {
    rep.has_mean_oral = true;
    rep.mean_oral = oral_sum / static_cast<double>(kOralTvNames.size());
  }
  return rep;
}

EvalReport evaluate_loaded(const models::Model<float>& model,
                           const std::vector<LoadedUtterance>& data, Protocol protocol,
                           int segment_frames) {
  if (data.empty()) fail(ErrorCategory::Config, "evaluate: empty data set");
  nn::SeqBatch<float> xs;
  xs.reserve(data.size());
  for (const auto& u : data) xs.push_back(u.features);
  const nn::SeqBatch<float> ys = model.infer(xs);
  std::vector<nn::Mat<double>> preds, targets;
  preds.reserve(data.size());
  targets.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    preds.push_back(ys[i].cast<double>());
    targets.push_back(data[i].targets.cast<double>());
  }
  return evaluate_pairs(preds, targets, model.spec().channels, protocol, segment_frames);
}

EvalReport evaluate_model(const models::Model<float>& model, const Manifest& manifest,
                          const std::string& split, Protocol protocol, int segment_frames) {
  const auto data = load_split(manifest, split, model.spec());
  return evaluate_loaded(model, data, protocol, segment_frames);
}

}  // namespace si::train
