#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bandshift/dos.hpp"
#include "bandshift/perturbation.hpp"
#include "bandshift/smooth.hpp"

namespace bandshift {

/// Periodic box of `cells` lattice cells, discretized by Fourier collocation with
/// `modes_per_cell` points per cell (equivalently, plane waves |q| <= modes_per_cell/2).
struct BoxDiscretization {
  int cells = 1;
  int modes_per_cell = 8;
  double cell_length = 2 * 3.14159265358979323846;
  double h_param = 0;  // mu^{-1/delta}, informational

  int size() const { return cells * modes_per_cell; }
  double length() const { return cells * cell_length; }
  double spacing() const { return cell_length / modes_per_cell; }
  /// Collocation node i, centred so that x = 0 is a node.
  double node(int i) const { return (i - size() / 2) * spacing(); }
};

struct OracleOptions {
  int modes_per_cell = 8;
  double c_tail = 30;
  int cells = 0;  // 0 selects the smallest box obeying the tail rule
  int dense_threshold = 4000;
  double cheb_degree_factor = 8;
  bool stochastic = false;  // Hutchinson probes instead of the exact moment trace
  int probes = 64;
  std::uint64_t seed = 1;
  bool extended_precision = false;  // long double eigensolves
  int threads = 0;
};

enum class TraceMethod { dense, chebyshev };
std::string to_string(TraceMethod method);

struct TraceEstimate {
  double value = 0;
  TraceMethod method = TraceMethod::dense;
  double error_estimate = 0;
  double mu = 0;
  int basis_size = 0;
  int cells = 0;
};

/// Smallest box with length >= c_tail mu^{1/delta} (at least `options.cells` cells).
BoxDiscretization box_rule(double mu, double delta, double cell_length, const OracleOptions& options);
/// Throws BoxTooSmallError when length < c_tail mu^{1/delta}.
void check_tail_rule(const BoxDiscretization& box, double mu, double delta, double c_tail);

/// mu w_max R^{1-delta} / (delta - 1) ||f'||_inf with R the box half-length.
double tail_bound(const BoxDiscretization& box, double mu, const DecayPotential& potential, double max_abs_fprime);

using BoxPotential = std::function<double(double)>;

/// Fourier-collocation matrix of -d^2/dx^2 + potential on the periodic box.
template <typename Scalar>
MatrixX<Scalar> box_hamiltonian(const BoxDiscretization& box, const BoxPotential& potential);

/// Sorted eigenvalues of the box Hamiltonian.
Eigen::VectorXd box_spectrum(const BoxDiscretization& box, const BoxPotential& potential, bool extended = false);

/// Periodic potential V of the problem sampled on the real line (1D).
BoxPotential periodic_potential(const Problem& problem);

/// tr f(H_a) - tr f(H_b).
TraceEstimate trace_difference(const BoxDiscretization& box, const CompactFunction& f, const BoxPotential& a,
                               const BoxPotential& b, const OracleOptions& options);

/// Chebyshev-moment trace of f(H) (exact basis sum, or Hutchinson probes when stochastic).
TraceEstimate chebyshev_trace(const BoxDiscretization& box, const CompactFunction& f, const BoxPotential& potential,
                              const OracleOptions& options);

enum class Operator { P_mu, Q };

struct QSetup {
  double M = 0;
  ReferenceOptions reference;
};

/// tr[f(P_mu) - f(P_0)] or tr[f(Q) - f(P_0)] on the periodic box.
TraceEstimate trace_f_diff(const Problem& problem, const BoxDiscretization& box, const CompactFunction& f, double mu,
                           const DecayPotential& potential, Operator which, const OracleOptions& options,
                           const QSetup& q = {});

struct QReductionRow {
  double mu = 0;
  double difference = 0;  // |tr f(P_mu) - tr f(Q)|
  double error_estimate = 0;
  int cells = 0;
};

struct QReductionReport {
  std::vector<QReductionRow> rows;
  double slope = 0;           // least-squares slope of log10 D against log10 mu
  std::vector<double> local_slopes;  // between consecutive mu
  bool strictly_decreasing = false;
};

QReductionReport q_reduction_check(const Problem& problem, const CompactFunction& f, const std::vector<double>& mus,
                                   const DecayPotential& potential, const OracleOptions& options, const QSetup& q);

/// tr[g_eps(lambda - P_0) - g_eps(lambda - P_mu)], i.e. the spectral shift derivative
/// smoothed by a unit-mass Gaussian of width eps.
double smoothed_xi_prime(const Problem& problem, const BoxDiscretization& box, double lambda, double epsilon,
                         double mu, const DecayPotential& potential, const OracleOptions& options);

struct SweepFit {
  std::vector<double> mus, traces;
  double c0 = 0, c1 = 0;           // two-term fit T = c0 mu^s + c1 mu^{s - 1/delta}
  double c0_one_term = 0;          // one-term fit T = c0 mu^s
  double residual_two_term = 0;    // max |T/mu^s - fit|
  double residual_one_term = 0;
  double slope = 0;                // least-squares slope of log|T| against log mu
};

/// Least-squares fits of given traces; throws InsufficientDataError for fewer than 3 points.
SweepFit fit_sweep(const std::vector<double>& mus, const std::vector<double>& traces, int n, double delta);

SweepFit mu_sweep_fit(const Problem& problem, const CompactFunction& f, const std::vector<double>& mus,
                      const DecayPotential& potential, const OracleOptions& options,
                      std::vector<TraceEstimate>* traces = nullptr);

}  // namespace bandshift
