#include "bandshift/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "bandshift/errors.hpp"

namespace bandshift {

GaussRule gauss_legendre(int n) {
  if (n < 1) throw ValidationError("gauss_legendre: need at least one node");
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1;
      dp = n * (x * p1 - p0) / (x * x - 1);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2 / ((1 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = rule.weights[n - 1 - i] = w;
  }
  return rule;
}

QuadratureResult tanh_sinh(const std::function<double(double, double, double)>& f, double a, double b,
                           const TanhSinhOptions& options) {
  QuadratureResult result;
  if (!(b > a)) return result;
  const double half = 0.5 * (b - a);
  const double pi_2 = 0.5 * std::numbers::pi;
  constexpr double t_max = 6.0;

  // Adds the node pair at +-t (or the centre when t == 0) to sum and to the L1 sum.
  double sum = 0, sum_abs = 0;
  auto add_pair = [&](double t) {
    const double y = pi_2 * std::sinh(t);
    const double cy = std::cosh(y);
    const double w = pi_2 * std::cosh(t) / (cy * cy);
    const double delta = 2 / (std::exp(2 * y) + 1);  // 1 - tanh(y)
    const double d = half * delta;
    if (!(d > 0) || !(w > 0)) return;
    if (t == 0) {
      ++result.evaluations;
      const double v = f(a + half, half, half);
      sum += w * v;
      sum_abs += w * std::abs(v);
      return;
    }
    result.evaluations += 2;
    const double left = f(a + d, d, 2 * half - d);
    const double right = f(b - d, 2 * half - d, d);
    sum += w * (left + right);
    sum_abs += w * (std::abs(left) + std::abs(right));
  };

  double h = 1.0;
  add_pair(0);
  for (int j = 1; j * h <= t_max; ++j) add_pair(j * h);
  double estimate = h * half * sum;
  double previous = estimate;
  for (int level = 1; level <= options.max_level; ++level) {
    h *= 0.5;
    for (int j = 1; j * h <= t_max; j += 2) add_pair(j * h);
    estimate = h * half * sum;
    result.error = std::abs(estimate - previous);
    previous = estimate;
    // Relative to the integral of |f| so that cancelling integrands still terminate.
    const double scale = h * half * sum_abs;
    if (level >= options.min_level &&
        (result.error <= options.rel_tolerance * scale || result.error <= options.abs_tolerance))
      break;
  }
  result.value = estimate;
  return result;
}

QuadratureResult tanh_sinh(const std::function<double(double)>& f, double a, double b,
                           const TanhSinhOptions& options) {
  return tanh_sinh([&](double x, double, double) { return f(x); }, a, b, options);
}

SphereRule sphere_rule(int dimension, int angular_points) {
  SphereRule rule;
  if (dimension == 1) {
    rule.directions = {{-1.0}, {1.0}};
    rule.weights = {1.0, 1.0};
    return rule;
  }
  if (angular_points < 1) throw ValidationError("sphere_rule: angular_points must be positive");
  if (dimension == 2) {
    const double w = 2 * std::numbers::pi / angular_points;
    for (int i = 0; i < angular_points; ++i) {
      const double phi = w * i;
      rule.directions.push_back({std::cos(phi), std::sin(phi)});
      rule.weights.push_back(w);
    }
    return rule;
  }
  if (dimension == 3) {
    // Gauss-Legendre in cos(theta) times trapezoid in phi.
    const int n_theta = std::max(1, angular_points / 2);
    const GaussRule gl = gauss_legendre(n_theta);
    const double w_phi = 2 * std::numbers::pi / angular_points;
    for (int i = 0; i < n_theta; ++i) {
      const double z = gl.nodes[i];
      const double rho = std::sqrt(1 - z * z);
      for (int j = 0; j < angular_points; ++j) {
        const double phi = w_phi * j;
        rule.directions.push_back({rho * std::cos(phi), rho * std::sin(phi), z});
        rule.weights.push_back(gl.weights[i] * w_phi);
      }
    }
    return rule;
  }
  throw ValidationError("angular quadrature is implemented for dimensions 1 to 3");
}

}  // namespace bandshift
