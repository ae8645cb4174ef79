#pragma once

#include <random>
#include <string>
#include <vector>

#include "si/loss.hpp"
#include "si/model.hpp"
#include "si/nn/gradcheck.hpp"

namespace si::models {

// Finite-difference check of a whole architecture in double precision:
// random inputs and targets, blended-loss objective, gradients over every
// trainable parameter and the inputs. Dropout is disabled and batch norm
// uses batch statistics (GradCheck mode), so the objective is smooth.
inline nn::GradCheckReport grad_check_model(const ModelSpec& spec, std::uint64_t data_seed,
                                            int frames, int n_seqs, double h = 1e-5) {
  Model<double> model(spec);
  nn::Rng rng(data_seed);
  std::normal_distribution<double> dist(0.0, 1.0);

  nn::SeqBatch<double> xs, targets;
  for (int s = 0; s < n_seqs; ++s) {
    nn::Mat<double> x(frames + s, spec.input_dim());  // ragged on purpose
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = dist(rng);
    nn::Mat<double> t(2 * x.rows(), spec.output_dim());
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = 0.8 * std::tanh(dist(rng));
    xs.push_back(std::move(x));
    targets.push_back(std::move(t));
  }

  nn::SeqBatch<double> input_grads;
  for (const auto& x : xs) input_grads.push_back(nn::Mat<double>::Zero(x.rows(), x.cols()));

  const nn::ParamList<double> params = model.params();
  nn::Ctx ctx{nn::Mode::GradCheck, nullptr};
  const train::LossConfig lc{0.8};

  auto fn = [&]() {
    nn::zero_grads(params);
    for (auto& g : input_grads) g.setZero();
    const nn::SeqBatch<double> pred = model.forward(xs, ctx);
    nn::SeqBatch<double> grad;
    const train::LossBreakdown b = train::combined_loss(pred, targets, lc, &grad);
    const nn::SeqBatch<double> dx = model.backward(grad);
    for (std::size_t i = 0; i < dx.size(); ++i) input_grads[i] = dx[i];
    return b.loss;
  };

  std::vector<nn::GcVar> vars;
  for (const auto& p : params)
    if (p.grad) vars.push_back(nn::gc_var(p));
  for (std::size_t i = 0; i < xs.size(); ++i)
    vars.push_back(nn::gc_var("input[" + std::to_string(i) + "]", xs[i], input_grads[i]));

  return nn::grad_check(vars, fn, h);
}

}  // namespace si::models
