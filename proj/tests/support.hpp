#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bandshift/bloch.hpp"
#include "bandshift/dos.hpp"
#include "bandshift/lattice.hpp"
#include "bandshift/perturbation.hpp"
#include "bandshift/smooth.hpp"

namespace bandshift::testing {

constexpr double kTwoPi = 2 * std::numbers::pi;

inline Lattice<double> line_lattice() { return Lattice<double>(Eigen::MatrixXd::Constant(1, 1, kTwoPi)); }

inline Problem free_problem(double g_max = 8) {
  return Problem(line_lattice(), FourierPotential<double>(1), g_max);
}

/// V(y) = 2 cos y, i.e. Fourier amplitudes 1 at m = +-1.
inline Problem mathieu_problem(double g_max = 8) {
  std::map<MillerIndex, std::complex<double>> v{{{1}, {1.0, 0.0}}, {{-1}, {1.0, 0.0}}};
  return Problem(line_lattice(), FourierPotential<double>(1, v, 1.0), g_max);
}

/// Symmetric 1D decay w0 |x|^-d + w1 |x|^-d-1.
inline DecayPotential decay_1d(double delta, double w0, double w1 = 0) {
  std::vector<std::pair<double, double>> pairs{{w0, w0}};
  if (w1 != 0) pairs.push_back({w1, w1});
  return DecayPotential(delta, AngularCoefficients::one_dimensional(pairs));
}

inline CompactFunction bump_function(double center, double half_width) {
  return TestFunction{center, half_width}.compact();
}

/// Sorted (k + m)^2 over |m| <= m_max.
inline std::vector<double> free_levels(double k, int m_max) {
  std::vector<double> out;
  for (int m = -m_max; m <= m_max; ++m) out.push_back((k + m) * (k + m));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace bandshift::testing
