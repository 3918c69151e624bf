#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bandshift/bloch.hpp"
#include "bandshift/coefficients.hpp"
#include "bandshift/oracle.hpp"
#include "bandshift/perturbation.hpp"

namespace bandshift {

/// Resolved run configuration. Parsed from `key = value` lines; list values are
/// separated by ';' and list entries with several numbers use ','.
struct RunConfig {
  // lattice / bz
  int dimension = 1;
  std::vector<double> basis;  // row-major, row i is e_i; empty selects 2 pi times the identity
  int bz_resolution = 256;
  // potential / bloch
  std::vector<std::vector<double>> fourier;  // entries m_1..m_n, re, im
  double g_max = 8;
  int p_max = 6;
  double fd_step = 0;  // 0 selects 1e-3 diam(E*)
  // dos
  double energy_min = -0.5, energy_max = 2.0;
  int energy_points = 1001;
  double kernel_width = 0;  // 0 selects 4x the energy spacing
  // window
  double window_a = 0.5, window_b = 1.5;
  int certify_energy_samples = 9;
  double certify_edge_margin = 1e-3;
  // perturbation and reference data
  double delta = 3;
  std::vector<std::vector<double>> w = {{1.0, 1.0}};  // n = 1: pairs (w(-1), w(+1)); else one constant
  double core_scale = 1;
  std::optional<double> r1, r2;
  double chi_plateau = 0.5;
  double reference_M = 0;  // 0 selects choose_M(supp f, sup |V|)
  // test function and coefficients
  double f_center = 1.0, f_half_width = 0.5;
  int radial_points = 16;
  int angular_points = 32;
  int coeff_bz_resolution = 4096;
  double gamma_fd_step = 0;
  double gamma_kernel_width = 5e-4;
  int gamma_bz_resolution = 16384;
  int gamma_points = 101;
  // oracle
  int oracle_cells = 0;
  int modes_per_cell = 8;
  double c_tail = 30;
  int dense_threshold = 4000;
  double cheb_degree_factor = 8;
  std::vector<double> mu_list = {1e2, 1e3, 1e4};
  bool extended_precision = false;
  bool stochastic = false;
  int probes = 64;
  double xi_lambda = 1.0, xi_epsilon = 0.05;
  // verify tolerances
  double duality_tolerance = 1e-4;
  double euler_tolerance = 1e-8;
  double phi0_tolerance = 1e-12;
  // run
  std::string output_dir = "out";
  std::string format = "csv";
  std::uint64_t seed = 1;

  /// Every key with its resolved value, in a fixed order.
  std::vector<std::pair<std::string, std::string>> echo() const;
};

/// Parses config text; unknown keys and malformed values raise ValidationError with the key name.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
void validate(const RunConfig& config);

/// Model objects described by a configuration.
Lattice<double> make_lattice(const RunConfig& config);
FourierPotential<double> make_potential(const RunConfig& config);
Problem make_problem(const RunConfig& config);
DecayPotential make_decay(const RunConfig& config);
TestFunction make_test_function(const RunConfig& config);
ReferenceOptions make_reference_options(const RunConfig& config);
CoefficientOptions make_coefficient_options(const RunConfig& config);
GammaOptions make_gamma_options(const RunConfig& config);
OracleOptions make_oracle_options(const RunConfig& config);

}  // namespace bandshift
