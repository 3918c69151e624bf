#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bandshift/bloch.hpp"
#include "bandshift/lattice.hpp"

namespace bandshift {

using Problem = BlochProblem<double>;
using Grid = BZGrid<double>;

/// Band values lambda_p(k) for p = 1..p_max at every grid point.
struct BandSamples {
  Grid grid;
  Eigen::MatrixXd values;  // p_max x K
  int dimension = 1;

  int p_max() const { return static_cast<int>(values.rows()); }
  /// (2 pi)^{-n}: converts grid weights into phase-space measure.
  double normalization() const;
  double band_min(int band) const { return values.row(band - 1).minCoeff(); }
  double band_max(int band) const { return values.row(band - 1).maxCoeff(); }
};

BandSamples sample_bands(const Problem& problem, const Grid& grid, int p_max, int threads = 0);

/// Integrated density of states by counting band values below lambda.
/// Throws BandTruncationError unless lambda_{p_max}(k) > lambda on the whole grid.
double ids(const BandSamples& samples, double lambda);
double ids(const Problem& problem, double lambda, const Grid& grid, int p_max);

/// Integrated density of states on an energy grid together with its
/// Gaussian-smoothed derivative.
struct DosTable {
  std::vector<double> energies;
  std::vector<double> rho;         // counting IDS
  std::vector<double> rho_prime;   // Gaussian-smoothed density
  std::vector<double> rho_smooth;  // exact antiderivative of rho_prime (IDS smoothed by the same kernel)
  double kernel_width = 0;
  double spectrum_min = 0;  // smallest sampled band value

  double spacing() const { return energies.size() > 1 ? energies[1] - energies[0] : 0; }
  /// True when the table starts far enough below the spectrum that rho_smooth vanishes there.
  bool starts_below_spectrum() const;
  /// Cubic Hermite interpolant of (rho_smooth, rho_prime); 0 below the table when it
  /// starts below the spectrum.
  double smooth_ids(double lambda) const;
  /// Derivative of smooth_ids.
  double smooth_density(double lambda) const;
};

/// Builds a DosTable on a uniform energy grid. kernel_width <= 0 selects 4x the grid spacing.
DosTable dos_density(const BandSamples& samples, const std::vector<double>& energies, double kernel_width = 0);
DosTable dos_density(const Problem& problem, const std::vector<double>& energies, const Grid& grid, int p_max,
                     double kernel_width = 0, int threads = 0);

std::vector<double> uniform_energies(double lo, double hi, int points);

struct FermiPoint {
  Eigen::VectorXd k;
  int band = 1;
};

struct FermiSurfaceSample {
  double lambda = 0;
  std::vector<FermiPoint> points;
};

/// Roots of lambda_p(k) = lambda located by sign changes along grid edges and refined
/// by bisection to `tol` in k.
FermiSurfaceSample fermi_surface(const Problem& problem, const BandSamples& samples, double lambda,
                                 double tol = 1e-10);
FermiSurfaceSample fermi_surface(const Problem& problem, double lambda, const Grid& grid, int p_max,
                                 double tol = 1e-10);

struct WindowCertificate {
  double a = 0, b = 0;
  double min_gradient_norm = 0;
  double min_laplacian = 0;
  double non_trapping_c0 = 0;
  double min_band_gap = 0;
  int fermi_points = 0;
  bool certified = false;
  std::string reason;  // empty when certified
};

struct CertifyOptions {
  int energy_samples = 9;
  double edge_margin = 1e-3;
  double fermi_tol = 1e-10;
  std::optional<double> fd_step;
};

/// Checks non-criticality and the convexity condition on the first band over [a, b]
/// and evaluates the non-trapping constant c0.
WindowCertificate certify_window(const Problem& problem, double a, double b, const Grid& grid, double delta,
                                 double w0_min, const CertifyOptions& options = {});

}  // namespace bandshift
