#pragma once

#include <functional>
#include <vector>

namespace bandshift {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule.
GaussRule gauss_legendre(int n);

/// Integral over [a, b] with a Gauss rule mapped affinely.
template <typename F>
double integrate(const GaussRule& rule, F&& f, double a, double b) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double sum = 0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return sum * half;
}

struct TanhSinhOptions {
  double rel_tolerance = 1e-12;
  double abs_tolerance = 1e-300;
  int max_level = 12;
  int min_level = 3;
};

struct QuadratureResult {
  double value = 0;
  double error = 0;
  int evaluations = 0;
};

/// Double-exponential quadrature on [a, b]. The integrand receives
/// (x, x - a, b - x) with both distances computed without cancellation, so
/// integrable endpoint singularities can be evaluated accurately.
QuadratureResult tanh_sinh(const std::function<double(double, double, double)>& f, double a, double b,
                           const TanhSinhOptions& options = {});

/// Convenience overload for integrands without endpoint singularities.
QuadratureResult tanh_sinh(const std::function<double(double)>& f, double a, double b,
                           const TanhSinhOptions& options = {});

/// Quadrature over the unit sphere S^{n-1}, n in {1, 2, 3}; weights sum to |S^{n-1}|.
/// For n = 1 the "sphere" is {-1, +1} with unit weights.
struct SphereRule {
  std::vector<std::vector<double>> directions;
  std::vector<double> weights;
};

SphereRule sphere_rule(int dimension, int angular_points);

}  // namespace bandshift
