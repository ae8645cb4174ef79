#include "si/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "si/eval.hpp"

namespace si::train {

namespace {

// Deep copy of every parameter and state tensor, for best-epoch snapshots.
std::vector<nn::Mat<float>> snapshot(const nn::ParamList<float>& params) {
  std::vector<nn::Mat<float>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(*p.value);
  return out;
}

void restore(const nn::ParamList<float>& params, const std::vector<nn::Mat<float>>& snap) {
  for (std::size_t i = 0; i < params.size(); ++i) *params[i].value = snap[i];
}

}  // namespace

double batch_loss(const models::ModelSpec& spec, const TrainConfig& cfg,
                  const nn::SeqBatch<float>& pred, const nn::SeqBatch<float>& target,
                  nn::SeqBatch<float>* grad) {
  const LossConfig lc{cfg.alpha};
  if (spec.arch != models::Arch::MtlSi) {
    const LossBreakdown b = combined_loss(pred, target, lc, grad);
    return b.loss;
  }
  const int c1 = spec.oral_head_dim();
  const int c2 = spec.source_head_dim();
  nn::SeqBatch<float> p1, p2, t1, t2;
  p1.reserve(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    p1.push_back(pred[i].leftCols(c1));
    p2.push_back(pred[i].rightCols(c2));
    t1.push_back(target[i].leftCols(c1));
    t2.push_back(target[i].rightCols(c2));
  }
  nn::SeqBatch<float> g1, g2;
  const LossBreakdown b1 = combined_loss(p1, t1, lc, grad ? &g1 : nullptr);
  const LossBreakdown b2 = combined_loss(p2, t2, lc, grad ? &g2 : nullptr);
  const double loss = cfg.head_weight_oral * b1.loss + cfg.head_weight_source * b2.loss;
  if (grad) {
    grad->clear();
    grad->reserve(pred.size());
    const float w1 = static_cast<float>(cfg.head_weight_oral);
    const float w2 = static_cast<float>(cfg.head_weight_source);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      nn::Mat<float> g(pred[i].rows(), pred[i].cols());
      g.leftCols(c1) = w1 * g1[i];
      g.rightCols(c2) = w2 * g2[i];
      grad->push_back(std::move(g));
    }
  }
  return loss;
}

TrainResult train_model(models::Model<float>& model, const Manifest& manifest,
                        const TrainConfig& cfg, std::ostream* log, nn::Adam<float>* opt_out) {
  if (cfg.batch_size < 1) fail(ErrorCategory::InvalidParameter, "batch size must be >= 1");
  if (cfg.max_epochs < 1) fail(ErrorCategory::InvalidParameter, "max epochs must be >= 1");

  const auto train_data = load_split(manifest, "train", model.spec());
  const auto dev_data = load_split(manifest, "dev", model.spec());

  nn::SeqBatch<float> dev_x, dev_y;
  for (const auto& u : dev_data) {
    dev_x.push_back(u.features);
    dev_y.push_back(u.targets);
  }

  nn::Adam<float> local_opt(cfg.lr);
  nn::Adam<float>& opt = opt_out ? *opt_out : local_opt;
  const nn::ParamList<float> params = model.params();
  opt.attach(params);

  nn::Rng shuffle_rng(cfg.seed);
  nn::Rng dropout_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  nn::Ctx train_ctx{nn::Mode::Train, &dropout_rng};

  EarlyStopping stopper(cfg.patience);
  TrainResult result;
  std::vector<nn::Mat<float>> best_weights = snapshot(params);
  const bool track_oral = [&] {
    for (const auto& n : kOralTvNames)
      if (std::find(model.spec().channels.begin(), model.spec().channels.end(), n) ==
          model.spec().channels.end())
        return false;
    return true;
  }();

  std::vector<std::size_t> order(train_data.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      nn::SeqBatch<float> bx, by;
      bx.reserve(end - start);
      by.reserve(end - start);
      for (std::size_t k = start; k < end; ++k) {
        bx.push_back(train_data[order[k]].features);
        by.push_back(train_data[order[k]].targets);
      }
      const nn::SeqBatch<float> pred = model.forward(bx, train_ctx);
      nn::SeqBatch<float> grad;
      const double loss = batch_loss(model.spec(), cfg, pred, by, &grad);
      if (!std::isfinite(loss))
        fail(ErrorCategory::Numeric, "training diverged: non-finite loss at epoch " +
                                         std::to_string(epoch) + ", batch " +
                                         std::to_string(batches + 1));
      nn::zero_grads(params);
      model.backward(grad);
      opt.step(params);
      epoch_loss += loss;
      ++batches;
    }
    epoch_loss /= static_cast<double>(batches);

    const double dev_loss = batch_loss(model.spec(), cfg, model.infer(dev_x), dev_y, nullptr);
    if (!std::isfinite(dev_loss))
      fail(ErrorCategory::Numeric,
           "training diverged: non-finite dev loss at epoch " + std::to_string(epoch));
    result.meta.train_loss_history.push_back(epoch_loss);
    result.meta.dev_loss_history.push_back(dev_loss);
    if (track_oral) {
      const EvalReport dev_rep = evaluate_loaded(model, dev_data, Protocol::Unsegmented);
      result.meta.dev_mean_oral_history.push_back(dev_rep.mean_oral);
    }

    const bool improved = stopper.observe(dev_loss);
    if (improved) best_weights = snapshot(params);
    if (log)
      *log << "epoch " << epoch << " train_loss " << epoch_loss << " dev_loss " << dev_loss
           << (improved ? " *" : "") << "\n";
    if (stopper.should_stop()) break;
  }

  restore(params, best_weights);
  result.meta.epochs_trained = stopper.epochs_seen();
  result.meta.best_epoch = stopper.best_epoch();
  result.meta.opt_step = opt.step_count();
  result.best_dev_loss = stopper.best_loss();
  return result;
}

}  // namespace si::train
