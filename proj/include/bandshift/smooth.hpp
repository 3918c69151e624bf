#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "bandshift/errors.hpp"

namespace bandshift {

/// C-infinity monotone step: 0 for t <= 0, 1 for t >= 1.
inline double smooth_step(double t) {
  if (t <= 0) return 0;
  if (t >= 1) return 1;
  const double a = std::exp(-1 / t);
  const double b = std::exp(-1 / (1 - t));
  return a / (a + b);
}

/// Standard bump exp(1 - 1/(1 - t^2)) on |t| < 1, zero outside; peak value 1.
inline double bump(double t) {
  if (std::abs(t) >= 1) return 0;
  return std::exp(1 - 1 / (1 - t * t));
}

inline double bump_derivative(double t) {
  if (std::abs(t) >= 1) return 0;
  const double d = 1 - t * t;
  return bump(t) * (-2 * t / (d * d));
}

inline double gaussian(double x, double width) {
  return std::exp(-0.5 * (x / width) * (x / width)) / (width * std::sqrt(2 * std::numbers::pi));
}

/// Real function with compact support [lo, hi] and a known derivative.
struct CompactFunction {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  double lo = 0;
  double hi = 0;

  double operator()(double x) const { return value(x); }

  void validate() const {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo <= hi))
      throw ValidationError("test function must have bounded support");
  }
};

/// Bump test function centred at `center` with half-width `half_width`.
struct TestFunction {
  double center = 1.0;
  double half_width = 0.5;

  double operator()(double lambda) const { return bump((lambda - center) / half_width); }
  double derivative(double lambda) const {
    return bump_derivative((lambda - center) / half_width) / half_width;
  }
  double lo() const { return center - half_width; }
  double hi() const { return center + half_width; }

  /// Maximum of |f'|, attained at |t| ~ 0.76 of the half-width.
  double max_abs_derivative() const {
    double best = 0;
    for (int i = 1; i < 2000; ++i) best = std::max(best, std::abs(bump_derivative(i / 2000.0)));
    return best / half_width;
  }

  CompactFunction compact() const {
    if (!(half_width > 0)) throw ValidationError("test function half_width must be positive");
    const TestFunction f = *this;
    return {[f](double x) { return f(x); }, [f](double x) { return f.derivative(x); }, lo(), hi()};
  }
};

/// alpha f + beta g.
inline CompactFunction combine(double alpha, const CompactFunction& f, double beta, const CompactFunction& g) {
  return {[=](double x) { return alpha * f.value(x) + beta * g.value(x); },
          [=](double x) { return alpha * f.derivative(x) + beta * g.derivative(x); },
          std::min(f.lo, g.lo), std::max(f.hi, g.hi)};
}

inline CompactFunction zero_function() {
  return {[](double) { return 0.0; }, [](double) { return 0.0; }, 0.0, 0.0};
}

}  // namespace bandshift
