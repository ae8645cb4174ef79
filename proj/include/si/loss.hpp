#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "si/nn/core.hpp"

namespace si::train {

struct LossConfig {
  double alpha = 0.8;  // correlation-vs-RMSE blend
};

// Pearson product-moment correlation. Either side constant (zero variance)
// is undefined; returns 0 there, and callers wanting a warning can test
// with pearson_defined first.
double pearson(const std::vector<double>& x, const std::vector<double>& y);
bool pearson_defined(const std::vector<double>& x, const std::vector<double>& y);

// Direct evaluation of the blended objective from already-known statistics.
inline double loss_from_stats(double mean_pc, double rmse, double alpha) {
  return alpha * (1.0 - mean_pc) + (1.0 - alpha) * rmse;
}

struct LossBreakdown {
  double loss = 0.0;
  double mean_pc = 0.0;
  double rmse = 0.0;
  std::vector<double> channel_pc;
  std::vector<std::uint8_t> channel_constant;  // 1 = undefined PC, counted as (1-PC)=1
  bool any_constant = false;
};

// Blended correlation + RMSE objective over a ragged batch:
//   loss = alpha * (1 - mean_c PC_c) + (1 - alpha) * RMSE
// PC is computed per channel over all frames of all sequences pooled; RMSE
// pools every frame-channel pair. If grad is non-null it receives
// d loss / d pred with the same ragged shape. A constant channel (in pred or
// target) contributes PC = 0 — i.e. full (1-PC) penalty — with zero PC
// gradient; the RMSE term still propagates. Statistics accumulate in double
// regardless of T.
template <class T>
LossBreakdown combined_loss(const nn::SeqBatch<T>& pred, const nn::SeqBatch<T>& target,
                            const LossConfig& cfg, nn::SeqBatch<T>* grad = nullptr);

namespace detail {

template <class T>
void check_loss_shapes(const nn::SeqBatch<T>& pred, const nn::SeqBatch<T>& target) {
  if (pred.size() != target.size())
    fail(ErrorCategory::Shape, "loss: prediction and target batch sizes differ (" +
                                   std::to_string(pred.size()) + " vs " +
                                   std::to_string(target.size()) + ")");
  if (pred.empty()) fail(ErrorCategory::Degenerate, "loss: empty batch");
  const Eigen::Index cols = pred[0].cols();
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].rows() != target[i].rows() || pred[i].cols() != target[i].cols())
      fail(ErrorCategory::Shape, "loss: shape mismatch in sequence " + std::to_string(i));
    if (pred[i].cols() != cols)
      fail(ErrorCategory::Shape, "loss: inconsistent channel count in sequence " +
                                     std::to_string(i));
  }
}

}  // namespace detail

template <class T>
LossBreakdown combined_loss(const nn::SeqBatch<T>& pred, const nn::SeqBatch<T>& target,
                            const LossConfig& cfg, nn::SeqBatch<T>* grad) {
  if (cfg.alpha < 0.0 || cfg.alpha > 1.0)
    fail(ErrorCategory::InvalidParameter, "loss alpha must be in [0, 1]");
  detail::check_loss_shapes(pred, target);

  const Eigen::Index channels = pred[0].cols();
  std::size_t total_frames = 0;
  for (const auto& p : pred) total_frames += static_cast<std::size_t>(p.rows());
  if (total_frames < 2)
    fail(ErrorCategory::Degenerate, "loss: fewer than 2 valid frames in the batch");

  LossBreakdown out;
  out.channel_pc.assign(static_cast<std::size_t>(channels), 0.0);
  out.channel_constant.assign(static_cast<std::size_t>(channels), 0);

  const double n_frames = static_cast<double>(total_frames);
  const double n_pairs = n_frames * static_cast<double>(channels);

  // Per-channel sufficient statistics, pooled over the batch.
  std::vector<double> sx(channels, 0.0), sy(channels, 0.0), sxx(channels, 0.0),
      syy(channels, 0.0), sxy(channels, 0.0);
  double sq_err = 0.0;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    for (Eigen::Index t = 0; t < pred[s].rows(); ++t) {
      for (Eigen::Index c = 0; c < channels; ++c) {
        const double x = static_cast<double>(pred[s](t, c));
        const double y = static_cast<double>(target[s](t, c));
        sx[c] += x;
        sy[c] += y;
        sxx[c] += x * x;
        syy[c] += y * y;
        sxy[c] += x * y;
        const double d = x - y;
        sq_err += d * d;
      }
    }
  }

  out.rmse = std::sqrt(sq_err / n_pairs);

  std::vector<double> mx(channels), my(channels), varx(channels), vary(channels), cov(channels);
  double pc_sum = 0.0;
  for (Eigen::Index c = 0; c < channels; ++c) {
    mx[c] = sx[c] / n_frames;
    my[c] = sy[c] / n_frames;
    varx[c] = sxx[c] / n_frames - mx[c] * mx[c];
    vary[c] = syy[c] / n_frames - my[c] * my[c];
    cov[c] = sxy[c] / n_frames - mx[c] * my[c];
    constexpr double kVarFloor = 1e-18;
    if (varx[c] <= kVarFloor || vary[c] <= kVarFloor) {
      out.channel_constant[static_cast<std::size_t>(c)] = 1;
      out.any_constant = true;
      out.channel_pc[static_cast<std::size_t>(c)] = 0.0;
    } else {
      double pc = cov[c] / std::sqrt(varx[c] * vary[c]);
      pc = std::min(1.0, std::max(-1.0, pc));
      out.channel_pc[static_cast<std::size_t>(c)] = pc;
      pc_sum += pc;
    }
  }
  out.mean_pc = pc_sum / static_cast<double>(channels);
  out.loss = loss_from_stats(out.mean_pc, out.rmse, cfg.alpha);

  if (grad) {
    grad->clear();
    grad->reserve(pred.size());
    const double rmse_scale =
        out.rmse > 0.0 ? (1.0 - cfg.alpha) / (n_pairs * out.rmse) : 0.0;
    const double pc_scale = -cfg.alpha / static_cast<double>(channels);
    for (std::size_t s = 0; s < pred.size(); ++s) {
      nn::Mat<T> g(pred[s].rows(), channels);
      for (Eigen::Index t = 0; t < pred[s].rows(); ++t) {
        for (Eigen::Index c = 0; c < channels; ++c) {
          const double x = static_cast<double>(pred[s](t, c));
          const double y = static_cast<double>(target[s](t, c));
          double dv = rmse_scale * (x - y);
          if (!out.channel_constant[static_cast<std::size_t>(c)]) {
            const double s_x = std::sqrt(varx[c] * n_frames);
            const double s_y = std::sqrt(vary[c] * n_frames);
            const double pc = out.channel_pc[static_cast<std::size_t>(c)];
            const double dpc = (y - my[c]) / (s_x * s_y) - pc * (x - mx[c]) / (s_x * s_x);
            dv += pc_scale * dpc;
          }
          g(t, c) = static_cast<T>(dv);
        }
      }
      grad->push_back(std::move(g));
    }
  }
  return out;
}

}  // namespace si::train
