#pragma once

#include <Eigen/Core>
#include <Eigen/QR>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "si/common.hpp"

namespace si::nn {

// Sequences are row-major frames x dim matrices; a batch is one matrix per
// utterance (ragged). Frames that do not exist are simply absent, which gives
// the same exclusion semantics as padding plus a validity mask.
template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
using Row = Eigen::Matrix<T, 1, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
using SeqBatch = std::vector<Mat<T>>;

using Rng = std::mt19937_64;

// Training-style forward passes; pure inference goes through the const
// infer() paths instead.
enum class Mode {
  Train,      // dropout active, batch norm uses batch stats + updates running
  GradCheck,  // dropout off, batch norm uses batch stats, running untouched
};

struct Ctx {
  Mode mode = Mode::Train;
  Rng* rng = nullptr;
};

template <class T>
struct ParamRef {
  std::string name;
  Mat<T>* value;
  Mat<T>* grad;  // null for non-trainable state (running statistics)
};

template <class T>
using ParamList = std::vector<ParamRef<T>>;

template <class T>
inline void zero_grads(const ParamList<T>& params) {
  for (const auto& p : params)
    if (p.grad) p.grad->setZero();
}

template <class T>
inline std::size_t param_count(const ParamList<T>& params, bool trainable_only = true) {
  std::size_t n = 0;
  for (const auto& p : params)
    if (!trainable_only || p.grad) n += static_cast<std::size_t>(p.value->size());
  return n;
}

// Fan-in scaled uniform init for projection matrices.
template <class T>
void init_scaled_uniform(Mat<T>& m, Rng& rng) {
  const double limit = std::sqrt(1.0 / static_cast<double>(m.rows()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = static_cast<T>(dist(rng));
}

// Orthogonal init for square recurrent matrices (QR of a Gaussian draw with
// sign correction so the distribution is Haar-uniform).
template <class T>
void init_orthogonal(Mat<T>& m, Rng& rng) {
  if (m.rows() != m.cols()) fail(ErrorCategory::Shape, "orthogonal init requires a square matrix");
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd g(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = dist(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().template triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = static_cast<T>(q(i, j));
}

}  // namespace si::nn
