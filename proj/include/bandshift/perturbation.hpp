#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace bandshift {

/// Angular profiles w_0..w_N on the unit sphere S^{n-1}.
class AngularCoefficients {
 public:
  using Profile = std::function<double(const Eigen::VectorXd&)>;

  AngularCoefficients(int dimension, std::vector<Profile> profiles);

  /// n = 1: each order is the pair (w_j(-1), w_j(+1)).
  static AngularCoefficients one_dimensional(const std::vector<std::pair<double, double>>& pairs);
  /// Direction-independent w_j.
  static AngularCoefficients constants(int dimension, const std::vector<double>& values);

  int dimension() const { return dimension_; }
  /// Highest order N.
  int order() const { return static_cast<int>(profiles_.size()) - 1; }
  /// w_j(theta); zero for j > N.
  double value(int j, const Eigen::VectorXd& theta) const;

  /// Directions used for sampled extrema and angular integrals.
  const std::vector<Eigen::VectorXd>& sample_directions() const { return directions_; }
  double w0_min() const { return w0_min_; }
  double w0_max() const { return w0_max_; }

 private:
  int dimension_;
  std::vector<Profile> profiles_;
  std::vector<Eigen::VectorXd> directions_;
  double w0_min_ = 0, w0_max_ = 0;
};

/// W(x) = sum_j w_j(x/|x|) |x|^{-delta-j} for |x| >= 1, glued to a constant core
/// C = core_scale * 2^delta * mean(w_0) for |x| <= 1/2 by a smooth step.
class DecayPotential {
 public:
  DecayPotential(double delta, AngularCoefficients angular, double core_scale = 1.0);

  int dimension() const { return angular_.dimension(); }
  double delta() const { return delta_; }
  double core_scale() const { return core_scale_; }
  double core_value() const { return core_; }
  const AngularCoefficients& angular() const { return angular_; }

  double operator()(const Eigen::VectorXd& x) const;
  /// Angular sum sum_j w_j(theta) r^{-delta-j} (the far-field model).
  double angular_sum(const Eigen::VectorXd& x) const;
  /// Leading term w_0(theta) r^{-delta}.
  double leading(const Eigen::VectorXd& x) const;

 private:
  double delta_;
  AngularCoefficients angular_;
  double core_scale_;
  double core_;
};

double eval_W(const DecayPotential& potential, const Eigen::VectorXd& x);

/// Unit direction x/|x|; for n = 1 this is the sign of x.
Eigen::VectorXd direction(const Eigen::VectorXd& x);

/// Reference constant: max(|a|+|b|, 4(|a|+|b|+V_sup)) + 1.
double choose_M(double a, double b, double v_sup);

/// Radial cutoff psi(s): 1 for s <= plateau, 0 for s >= 1, smooth monotone in between.
struct ChiProfile {
  double plateau = 0.5;
  double operator()(double s) const;
};

struct ReferenceOptions {
  std::optional<double> r1;
  std::optional<double> r2;
  ChiProfile chi;
};

/// Semiclassical reference data: cutoff chi, constant M, the functions Theta and Phi,
/// phi_0, phi_j, phi(x, h) and the compactly supported correction W~.
class ReferenceData {
 public:
  ReferenceData(DecayPotential potential, double M, double h, double r1, double r2, ChiProfile chi);

  double M() const { return M_; }
  double h() const { return h_; }
  double mu() const { return std::pow(h_, -potential_.delta()); }
  double r1() const { return r1_; }
  double r2() const { return r2_; }
  const ChiProfile& chi_profile() const { return chi_; }
  const DecayPotential& potential() const { return potential_; }
  /// Radius of supp chi: r1 M^{-1/delta}.
  double chi_radius() const;

  double chi(const Eigen::VectorXd& x) const;
  double theta(double t) const;
  double Phi(double t) const { return t - theta(t); }
  double phi0(const Eigen::VectorXd& x) const;
  /// phi_j(x) = (1 - chi(x)) w_j(theta) |x|^{-delta-j}; j = 0 gives phi0.
  double phi_j(int j, const Eigen::VectorXd& x) const;
  /// phi(x, h) = [1 - chi(x)] h^{-delta} W(x/h) + M chi(x).
  double phi(const Eigen::VectorXd& x, double h) const;
  double phi(const Eigen::VectorXd& x) const { return phi(x, h_); }
  /// sum_{j <= N} phi_j(x) h^j.
  double phi_expansion(const Eigen::VectorXd& x, double h) const;
  /// W~(x) = chi(hx)[h^{-delta} W(x) - M].
  double w_tilde(const Eigen::VectorXd& x) const;
  /// Potential of Q in unscaled coordinates: phi(hx, h) = (1 - chi(hx)) mu W(x) + M chi(hx).
  double q_potential(const Eigen::VectorXd& x) const;

 private:
  DecayPotential potential_;
  double M_, h_, r1_, r2_;
  ChiProfile chi_;
};

/// True when B(0, r1 M^{-1/d}/h) is inside {h^{-d} W > M} and that set is inside
/// B(0, r2 M^{-1/d}/h), checked on sampled rays.
bool ball_inclusions_hold(const DecayPotential& potential, double M, double h, double r1, double r2);

/// Largest h = 2^{-j} (j >= 0) passing the ball-inclusion check.
double largest_admissible_h(const DecayPotential& potential, double M, const ReferenceOptions& options = {});

/// Builds reference data; throws HTooLargeError if the ball inclusions fail at h.
ReferenceData build_reference(const DecayPotential& potential, double M, double h,
                              const ReferenceOptions& options = {});

struct StructureReport {
  double euler_residual = 0;        // max relative residual of x.grad(w0 r^-d) + d w0 r^-d on {chi = 0}
  double phi0_deviation = 0;        // max |phi0 - w0 r^-d| on {phi0 < M}
  double min_phi0_minus_M = 0;      // min of phi0 - M on supp chi; zero on the plateau chi = 1
  double min_transition_phi0_minus_M = 0;  // same over 0 < chi < 1, where the inequality is strict
  double min_leading_minus_M = 0;   // min of w0 r^-d - M on supp chi
  int outside_points = 0, below_M_points = 0, support_points = 0;
  double theta_identity_error = 0;  // max |Theta(t) - t| for t >= M/2
  double theta_min = 0;             // min Theta over sampled t
};

/// Radii sampled on rays for structure checks (x = 0 excluded).
std::vector<Eigen::VectorXd> structure_samples(const ReferenceData& ref, int radial_points = 400);

StructureReport verify_structure(const ReferenceData& ref, const std::vector<Eigen::VectorXd>& samples,
                                 double fd_step = 1e-5);

}  // namespace bandshift
