#include "bandshift/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "bandshift/errors.hpp"
#include "bandshift/quadrature.hpp"
#include "bandshift/smooth.hpp"

namespace bandshift {

namespace {

std::vector<Eigen::VectorXd> default_directions(int n) {
  std::vector<Eigen::VectorXd> dirs;
  const SphereRule rule = sphere_rule(n, n == 2 ? 64 : 24);
  for (const auto& d : rule.directions) dirs.push_back(Eigen::Map<const Eigen::VectorXd>(d.data(), n));
  return dirs;
}

}  // namespace

AngularCoefficients::AngularCoefficients(int dimension, std::vector<Profile> profiles)
    : dimension_(dimension), profiles_(std::move(profiles)) {
  if (dimension < 1) throw ValidationError("angular coefficients: dimension must be positive");
  if (profiles_.empty()) throw ValidationError("angular coefficients: w_0 is required");
  directions_ = default_directions(dimension);
  w0_min_ = std::numeric_limits<double>::infinity();
  w0_max_ = -w0_min_;
  for (const auto& d : directions_) {
    const double w0 = profiles_[0](d);
    w0_min_ = std::min(w0_min_, w0);
    w0_max_ = std::max(w0_max_, w0);
  }
  if (!(w0_min_ > 0)) throw ValidationError("pert.w: w_0 must be strictly positive on the sphere");
}

AngularCoefficients AngularCoefficients::one_dimensional(const std::vector<std::pair<double, double>>& pairs) {
  std::vector<Profile> profiles;
  for (const auto& [minus, plus] : pairs)
    profiles.push_back([minus, plus](const Eigen::VectorXd& theta) { return theta(0) < 0 ? minus : plus; });
  return AngularCoefficients(1, std::move(profiles));
}

AngularCoefficients AngularCoefficients::constants(int dimension, const std::vector<double>& values) {
  std::vector<Profile> profiles;
  for (double v : values) profiles.push_back([v](const Eigen::VectorXd&) { return v; });
  return AngularCoefficients(dimension, std::move(profiles));
}

double AngularCoefficients::value(int j, const Eigen::VectorXd& theta) const {
  if (j < 0 || j > order()) return 0;
  return profiles_[j](theta);
}

Eigen::VectorXd direction(const Eigen::VectorXd& x) {
  const double r = x.norm();
  if (r == 0) throw ValidationError("direction of the zero vector is undefined");
  return x / r;
}

DecayPotential::DecayPotential(double delta, AngularCoefficients angular, double core_scale)
    : delta_(delta), angular_(std::move(angular)), core_scale_(core_scale) {
  const int n = angular_.dimension();
  if (!(delta_ > n))
    throw ValidationError("pert.delta must exceed the dimension n (decay assumption delta > n)");
  if (!(core_scale_ > 0)) throw ValidationError("pert.core_scale must be positive");
  double mean = 0;
  for (const auto& d : angular_.sample_directions()) mean += angular_.value(0, d);
  mean /= static_cast<double>(angular_.sample_directions().size());
  core_ = core_scale_ * std::pow(2.0, delta_) * mean;
  // Positivity in the blend region, where a negative w_j could pull the sum down.
  for (const auto& d : angular_.sample_directions())
    for (int i = 0; i <= 200; ++i) {
      const double r = 0.5 + 0.75 * i / 200.0;
      if (!((*this)(Eigen::VectorXd(r * d)) > 0))
        throw ValidationError("W is not strictly positive; adjust pert.w or pert.core_scale");
    }
}

double DecayPotential::angular_sum(const Eigen::VectorXd& x) const {
  const double r = x.norm();
  const Eigen::VectorXd theta = x / r;
  double sum = 0;
  for (int j = 0; j <= angular_.order(); ++j) sum += angular_.value(j, theta) * std::pow(r, -delta_ - j);
  return sum;
}

double DecayPotential::leading(const Eigen::VectorXd& x) const {
  const double r = x.norm();
  return angular_.value(0, x / r) * std::pow(r, -delta_);
}

double DecayPotential::operator()(const Eigen::VectorXd& x) const {
  const double r = x.norm();
  if (r >= 1) return angular_sum(x);
  if (r <= 0.5) return core_;
  const double beta = smooth_step(2 * r - 1);
  return (1 - beta) * core_ + beta * angular_sum(x);
}

double eval_W(const DecayPotential& potential, const Eigen::VectorXd& x) { return potential(x); }

double choose_M(double a, double b, double v_sup) {
  if (!(a < b)) throw ValidationError("choose_M: need a < b");
  const double s = std::abs(a) + std::abs(b);
  return std::max(s, 4 * (s + v_sup)) + 1;
}

double ChiProfile::operator()(double s) const {
  if (s <= plateau) return 1;
  if (s >= 1) return 0;
  return 1 - smooth_step((s - plateau) / (1 - plateau));
}

ReferenceData::ReferenceData(DecayPotential potential, double M, double h, double r1, double r2, ChiProfile chi)
    : potential_(std::move(potential)), M_(M), h_(h), r1_(r1), r2_(r2), chi_(chi) {}

double ReferenceData::chi_radius() const { return r1_ * std::pow(M_, -1 / potential_.delta()); }

double ReferenceData::chi(const Eigen::VectorXd& x) const { return chi_(x.norm() / chi_radius()); }

double ReferenceData::theta(double t) const {
  const double lo = M_ / 6, width = M_ / 3;
  if (t >= M_ / 2) return t;
  if (t <= lo) return M_ / 3;
  const double y = (t - lo) / width;
  TanhSinhOptions opts;
  opts.rel_tolerance = 1e-15;
  const double integral = tanh_sinh([](double s) { return smooth_step(s); }, 0, y, opts).value;
  return M_ / 3 + width * integral;
}

double ReferenceData::phi_j(int j, const Eigen::VectorXd& x) const {
  const double c = chi(x);
  if (c >= 1) return j == 0 ? M_ : 0.0;
  const double r = x.norm();
  const double term = (1 - c) * potential_.angular().value(j, x / r) * std::pow(r, -potential_.delta() - j);
  return j == 0 ? term + M_ * c : term;
}

double ReferenceData::phi0(const Eigen::VectorXd& x) const { return phi_j(0, x); }

double ReferenceData::phi(const Eigen::VectorXd& x, double h) const {
  const double c = chi(x);
  if (c >= 1) return M_;
  return (1 - c) * std::pow(h, -potential_.delta()) * potential_(Eigen::VectorXd(x / h)) + M_ * c;
}

double ReferenceData::phi_expansion(const Eigen::VectorXd& x, double h) const {
  double sum = 0;
  for (int j = 0; j <= potential_.angular().order(); ++j) sum += phi_j(j, x) * std::pow(h, j);
  return sum;
}

double ReferenceData::w_tilde(const Eigen::VectorXd& x) const {
  const double c = chi(Eigen::VectorXd(h_ * x));
  if (c == 0) return 0;
  return c * (mu() * potential_(x) - M_);
}

double ReferenceData::q_potential(const Eigen::VectorXd& x) const {
  const double c = chi(Eigen::VectorXd(h_ * x));
  return (1 - c) * mu() * potential_(x) + M_ * c;
}

bool ball_inclusions_hold(const DecayPotential& potential, double M, double h, double r1, double r2) {
  const double d = potential.delta();
  const double scale = std::pow(M, -1 / d) / h;
  const double inner = r1 * scale, outer = r2 * scale;
  const double mu = std::pow(h, -d);
  constexpr int kPoints = 200;
  for (const auto& dir : potential.angular().sample_directions()) {
    for (int i = 1; i <= kPoints; ++i) {
      const double r = inner * i / kPoints;
      if (!(mu * potential(Eigen::VectorXd(r * dir)) > M)) return false;
    }
    for (int i = 0; i <= kPoints; ++i) {
      const double r = outer * (1 + 3.0 * i / kPoints);
      if (mu * potential(Eigen::VectorXd(r * dir)) > M) return false;
    }
  }
  return true;
}

namespace {

std::pair<double, double> resolve_radii(const DecayPotential& potential, const ReferenceOptions& options) {
  const double d = potential.delta();
  const double lo = std::pow(potential.angular().w0_min(), 1 / d);
  const double hi = std::pow(potential.angular().w0_max(), 1 / d);
  const double r1 = options.r1.value_or(0.9 * lo);
  const double r2 = options.r2.value_or(1.1 * hi);
  if (!(r1 > 0 && r1 < lo)) throw ValidationError("ref.r1 must lie in (0, (min w0)^{1/delta})");
  if (!(r2 > hi)) throw ValidationError("ref.r2 must exceed (max w0)^{1/delta}");
  if (!(options.chi.plateau > 0 && options.chi.plateau < 1))
    throw ValidationError("chi plateau must lie in (0, 1)");
  return {r1, r2};
}

}  // namespace

double largest_admissible_h(const DecayPotential& potential, double M, const ReferenceOptions& options) {
  const auto [r1, r2] = resolve_radii(potential, options);
  double h = 1;
  for (int j = 0; j < 60; ++j, h *= 0.5)
    if (ball_inclusions_hold(potential, M, h, r1, r2)) return h;
  throw HTooLargeError("no admissible h found for the ball inclusions");
}

ReferenceData build_reference(const DecayPotential& potential, double M, double h, const ReferenceOptions& options) {
  if (!(M > 0)) throw ValidationError("reference constant M must be positive");
  if (!(h > 0)) throw ValidationError("h must be positive");
  const auto [r1, r2] = resolve_radii(potential, options);
  if (!ball_inclusions_hold(potential, M, h, r1, r2))
    throw HTooLargeError("h = " + std::to_string(h) + " is too large: ball inclusions around the core fail");
  return ReferenceData(potential, M, h, r1, r2, options.chi);
}

std::vector<Eigen::VectorXd> structure_samples(const ReferenceData& ref, int radial_points) {
  std::vector<Eigen::VectorXd> samples;
  const double rc = ref.chi_radius();
  const double r_min = 1e-3 * rc, r_max = 10 * ref.r2() * std::pow(ref.M(), -1 / ref.potential().delta());
  for (const auto& dir : ref.potential().angular().sample_directions())
    for (int i = 0; i < radial_points; ++i) {
      const double r = r_min * std::pow(r_max / r_min, static_cast<double>(i) / (radial_points - 1));
      samples.emplace_back(r * dir);
    }
  return samples;
}

StructureReport verify_structure(const ReferenceData& ref, const std::vector<Eigen::VectorXd>& samples,
                                 double fd_step) {
  StructureReport report;
  report.min_phi0_minus_M = std::numeric_limits<double>::infinity();
  report.min_transition_phi0_minus_M = std::numeric_limits<double>::infinity();
  report.min_leading_minus_M = std::numeric_limits<double>::infinity();
  const DecayPotential& W = ref.potential();
  const double d = W.delta();
  const int n = W.dimension();
  for (const auto& x : samples) {
    if (x.norm() == 0) throw ValidationError("structure samples must avoid x = 0");
    const double c = ref.chi(x);
    const double lead = W.leading(x);
    const double p0 = ref.phi0(x);
    if (c == 0) {
      // Five-point stencil for each partial derivative.
      double x_dot_grad = 0;
      for (int i = 0; i < n; ++i) {
        auto g = [&](double t) {
          Eigen::VectorXd y = x;
          y(i) += t;
          return W.leading(y);
        };
        const double di = (-g(2 * fd_step) + 8 * g(fd_step) - 8 * g(-fd_step) + g(-2 * fd_step)) / (12 * fd_step);
        x_dot_grad += x(i) * di;
      }
      report.euler_residual = std::max(report.euler_residual, std::abs(x_dot_grad + d * lead) / (d * lead));
      ++report.outside_points;
    }
    if (p0 < ref.M()) {
      report.phi0_deviation = std::max(report.phi0_deviation, std::abs(p0 - lead));
      ++report.below_M_points;
    }
    if (c > 0) {
      report.min_phi0_minus_M = std::min(report.min_phi0_minus_M, p0 - ref.M());
      report.min_leading_minus_M = std::min(report.min_leading_minus_M, lead - ref.M());
      if (c < 1) report.min_transition_phi0_minus_M = std::min(report.min_transition_phi0_minus_M, p0 - ref.M());
      ++report.support_points;
    }
  }
  report.theta_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 400; ++i) {
    const double t = 2 * ref.M() * i / 400.0;
    const double th = ref.theta(t);
    report.theta_min = std::min(report.theta_min, th);
    if (t >= ref.M() / 2) report.theta_identity_error = std::max(report.theta_identity_error, std::abs(th - t));
  }
  return report;
}

}  // namespace bandshift
