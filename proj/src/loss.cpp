#include "si/loss.hpp"

namespace si::train {

namespace {

struct PearsonStats {
  double varx, vary, cov;
};

PearsonStats stats(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    fail(ErrorCategory::Shape, "pearson: length mismatch (" + std::to_string(x.size()) + " vs " +
                                   std::to_string(y.size()) + ")");
  if (x.size() < 2) fail(ErrorCategory::EmptyInput, "pearson requires at least 2 points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double vx = 0, vy = 0, cv = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = x[i] - mx, b = y[i] - my;
    vx += a * a;
    vy += b * b;
    cv += a * b;
  }
  return {vx, vy, cv};
}

constexpr double kVarFloor = 1e-18;

}  // namespace

bool pearson_defined(const std::vector<double>& x, const std::vector<double>& y) {
  const PearsonStats s = stats(x, y);
  return s.varx > kVarFloor && s.vary > kVarFloor;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const PearsonStats s = stats(x, y);
  if (s.varx <= kVarFloor || s.vary <= kVarFloor) return 0.0;
  const double pc = s.cov / std::sqrt(s.varx * s.vary);
  return std::min(1.0, std::max(-1.0, pc));
}

}  // namespace si::train
