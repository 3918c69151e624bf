#pragma once

#include <vector>

#include "bandshift/dos.hpp"
#include "bandshift/perturbation.hpp"
#include "bandshift/smooth.hpp"

namespace bandshift {

struct CoefficientOptions {
  int bz_resolution = 4096;  // per axis
  int angular_points = 32;   // sphere quadrature for n >= 2
  int radial_points = 16;    // Gauss nodes on smooth radial pieces (reference route)
  int p_max = 0;             // 0 selects the first band lying entirely above sup supp f + 1
  double rel_tolerance = 1e-13;
  int threads = 0;
};

struct CoefficientValue {
  double value = 0;
  double error = 0;  // |value(res) - value(res/2)|
};

struct CoefficientResult {
  double a0 = 0, a1 = 0;
  double a0_error = 0, a1_error = 0;
  int bz_resolution = 0;
  int p_max = 0;             // bands 1..p_max-1 contribute
  double truncation_radius = 0;  // largest r with w0 r^-delta >= sup supp f - inf lambda_1
};

/// Angular constants of the radial substitution u = w0(theta) r^{-delta}:
/// A = (1/delta) int w0^{n/delta}, B = (1/delta) int w1 w0^{(n-1)/delta - 1}.
struct AngularConstants {
  double A = 0, B = 0;
};
AngularConstants angular_constants(const DecayPotential& potential, int angular_points);

/// Radial transforms in the shift variable u, with s = n/delta:
/// I0(l) = int_0^inf [f(l+u) - f(l)] u^{-s-1} du and I1(l) = int_0^inf f'(l+u) u^{(1-n)/delta} du.
double shift_transform0(const CompactFunction& f, double lambda, double s, double rel_tolerance = 1e-13);
double shift_transform1(const CompactFunction& f, double lambda, int n, double delta, double rel_tolerance = 1e-13);

/// First band index whose minimum over the grid exceeds `energy`.
int band_cutoff(const Problem& problem, const Grid& grid, double energy, int threads = 0);

/// a0(f) and a1(f) through the substitution route with a self-convergence error.
CoefficientResult compute_coefficients(const CompactFunction& f, const Problem& problem,
                                       const DecayPotential& potential, const CoefficientOptions& options = {});
CoefficientValue coefficient_a(int order, const CompactFunction& f, const Problem& problem,
                               const DecayPotential& potential, const CoefficientOptions& options = {});

/// Same coefficients evaluated directly in x-space through phi_0 and phi_1 of the
/// reference data; the cutoff chi enters the integrand, the result must not depend on it.
CoefficientResult reference_coefficients(const CompactFunction& f, const Problem& problem, const ReferenceData& ref,
                                         const CoefficientOptions& options = {});

struct EnergyWindow {
  double a = 0, b = 0;
  bool contains(double lambda) const { return lambda >= a && lambda <= b; }
};

struct GammaOptions {
  double fd_step = 0;  // 0 selects the DOS kernel width
  int angular_points = 32;
};

/// gamma_0 or gamma_1 at lambda from a DOS table that starts below the spectrum.
double gamma(int order, double lambda, const DecayPotential& potential, const DosTable& dos,
             const EnergyWindow& window, const GammaOptions& options = {});

struct GammaTable {
  std::vector<double> energies, gamma0, gamma1;
};
GammaTable gamma_table(const std::vector<double>& energies, const DecayPotential& potential, const DosTable& dos,
                       const EnergyWindow& window, const GammaOptions& options = {});

struct DualityReport {
  double a0 = 0, a1 = 0;
  double pairing0 = 0, pairing1 = 0;  // int gamma_j f
  double residual0 = 0, residual1 = 0;  // |a_j + int gamma_j f|
};

/// Compares a_j(f) with -<gamma_j, f>; supp f must lie in the window.
DualityReport duality_check(const CompactFunction& f, const EnergyWindow& window, const Problem& problem,
                            const DecayPotential& potential, const DosTable& dos,
                            const CoefficientOptions& coeff_options = {}, const GammaOptions& gamma_options = {},
                            int lambda_panels = 16);

/// DOS table suited to gamma near [lo, hi]: starts below the spectrum, kernel width sigma,
/// spacing sigma/4.
DosTable gamma_dos_table(const Problem& problem, double hi, double sigma, int bz_resolution, int threads = 0);

}  // namespace bandshift
