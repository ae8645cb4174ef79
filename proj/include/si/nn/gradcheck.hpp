#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "si/nn/core.hpp"

namespace si::nn {

// A flat view of one differentiable quantity (parameter block or input) for
// finite-difference checking. `grad` must point at the analytic gradient
// produced by the closure under test.
struct GcVar {
  std::string name;
  double* value;
  const double* grad;
  std::size_t size;
};

inline GcVar gc_var(const ParamRef<double>& p) {
  return {p.name, p.value->data(), p.grad->data(), static_cast<std::size_t>(p.value->size())};
}

inline GcVar gc_var(const std::string& name, Mat<double>& value, const Mat<double>& grad) {
  return {name, value.data(), grad.data(), static_cast<std::size_t>(value.size())};
}

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_var;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

// fn() must zero gradients, run forward and backward, and return the scalar
// loss; after it returns, the grad pointers in `vars` hold analytic
// gradients. Central differences with step h; relative error uses a floor so
// near-zero gradients are compared absolutely.
template <class Fn>
GradCheckReport grad_check(const std::vector<GcVar>& vars, Fn&& fn, double h = 1e-5,
                           double denom_floor = 1e-3) {
  GradCheckReport rep;
  fn();  // populate analytic gradients at the unperturbed point
  std::vector<std::vector<double>> analytic;
  analytic.reserve(vars.size());
  for (const auto& v : vars) analytic.emplace_back(v.grad, v.grad + v.size);

  for (std::size_t vi = 0; vi < vars.size(); ++vi) {
    const GcVar& v = vars[vi];
    for (std::size_t i = 0; i < v.size; ++i) {
      const double saved = v.value[i];
      v.value[i] = saved + h;
      const double lp = fn();
      v.value[i] = saved - h;
      const double lm = fn();
      v.value[i] = saved;
      const double num = (lp - lm) / (2.0 * h);
      const double ana = analytic[vi][i];
      const double denom = std::max({std::abs(ana), std::abs(num), denom_floor});
      const double rel = std::abs(ana - num) / denom;
      ++rep.checked;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_var = v.name;
        rep.worst_index = i;
        rep.analytic = ana;
        rep.numeric = num;
      }
    }
  }
  fn();  // leave gradients consistent with the restored point
  return rep;
}

}  // namespace si::nn
