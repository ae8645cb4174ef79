#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "si/nn/core.hpp"

namespace si::nn {

// Adam with bias correction. Moments are keyed by parameter name so they can
// round-trip through checkpoints.
template <class T>
class Adam {
 public:
  explicit Adam(T lr = T(5e-4), T beta1 = T(0.9), T beta2 = T(0.999), T eps = T(1e-8))
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    if (!(lr > T(0))) fail(ErrorCategory::InvalidParameter, "learning rate must be positive");
  }

  void attach(const ParamList<T>& params) {
    m_.clear();
    v_.clear();
    names_.clear();
    for (const auto& p : params) {
      if (!p.grad) continue;
      m_.push_back(Mat<T>::Zero(p.value->rows(), p.value->cols()));
      v_.push_back(Mat<T>::Zero(p.value->rows(), p.value->cols()));
      names_.push_back(p.name);
    }
    step_ = 0;
  }

  void step(const ParamList<T>& params) {
    ++step_;
    const T bc1 = T(1) - static_cast<T>(std::pow(static_cast<double>(beta1_), step_));
    const T bc2 = T(1) - static_cast<T>(std::pow(static_cast<double>(beta2_), step_));
    std::size_t k = 0;
    for (const auto& p : params) {
      if (!p.grad) continue;
      if (k >= m_.size()) fail(ErrorCategory::Shape, "optimizer not attached to this parameter set");
      const Mat<T>& g = *p.grad;
      if (!g.allFinite())
        fail(ErrorCategory::Numeric, "non-finite gradient for parameter " + p.name);
      Mat<T>& m = m_[k];
      Mat<T>& v = v_[k];
      m = beta1_ * m + (T(1) - beta1_) * g;
      v = (beta2_ * v.array() + (T(1) - beta2_) * g.array().square()).matrix();
      const auto m_hat = m.array() / bc1;
      const auto v_hat = v.array() / bc2;
      p.value->array() -= lr_ * m_hat / (v_hat.sqrt() + eps_);
      ++k;
    }
    if (k != m_.size()) fail(ErrorCategory::Shape, "optimizer parameter count changed");
  }

  std::int64_t step_count() const { return step_; }
  void set_step_count(std::int64_t s) { step_ = s; }
  T learning_rate() const { return lr_; }

  std::size_t slot_count() const { return m_.size(); }
  const std::string& slot_name(std::size_t i) const { return names_[i]; }
  Mat<T>& first_moment(std::size_t i) { return m_[i]; }
  Mat<T>& second_moment(std::size_t i) { return v_[i]; }

 private:
  T lr_, beta1_, beta2_, eps_;
  std::int64_t step_ = 0;
  std::vector<Mat<T>> m_, v_;
  std::vector<std::string> names_;
};

}  // namespace si::nn
