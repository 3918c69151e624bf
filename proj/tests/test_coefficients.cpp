#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <numbers>

#include "bandshift/coefficients.hpp"
#include "support.hpp"

namespace bandshift {
namespace {

using boost::math::quadrature::exp_sinh;
using boost::math::quadrature::gauss_kronrod;
using testing::bump_function;
using testing::decay_1d;
using testing::free_problem;
using testing::mathieu_problem;

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Adaptive Gauss-Kronrod over [0, xi_max] split at the given breakpoints.
template <typename F>
double integrate_pieces(F g, std::vector<double> breaks, double xi_max) {
  breaks.push_back(0);
  breaks.push_back(xi_max);
  std::sort(breaks.begin(), breaks.end());
  double sum = 0;
  for (std::size_t i = 1; i < breaks.size(); ++i)
    if (breaks[i] > breaks[i - 1]) sum += gauss_kronrod<double, 61>::integrate(g, breaks[i - 1], breaks[i], 12, 1e-10);
  return sum;
}

// Free line with W = w0 |x|^-3 + w1 |x|^-4: unfold the bands to xi in R, integrate xi
// innermost and x outermost on the half-lines (both integrands are even).
struct FreeOracle {
  TestFunction tf;
  double w0 = 1, w1 = 0;

  double xi_max() const { return std::sqrt(tf.hi()) + 0.1; }
  std::vector<double> breaks(double s) const {
    std::vector<double> b;
    for (double e : {tf.lo(), tf.hi(), tf.center}) {
      if (e - s > 0) b.push_back(std::sqrt(e - s));
      if (e > 0) b.push_back(std::sqrt(e));
    }
    return b;
  }
  // Radius below which the shifted argument leaves supp f.
  double x0() const { return std::pow(tf.hi() / w0, -1.0 / 3); }

  double a0() const {
    auto inner = [&](double x) {
      const double s = w0 * std::pow(x, -3);
      return integrate_pieces([&](double xi) { return tf(xi * xi + s) - tf(xi * xi); }, breaks(s), xi_max());
    };
    const double mass = integrate_pieces([&](double xi) { return tf(xi * xi); }, breaks(0), xi_max());
    const double tail = exp_sinh<double>().integrate(inner, x0(), kInf, 1e-10);
    return 4 * (-x0() * mass + tail) / (2 * kPi);
  }

  double a1() const {
    auto inner = [&](double x) {
      const double s = w0 * std::pow(x, -3);
      return w1 * std::pow(x, -4) *
             integrate_pieces([&](double xi) { return tf.derivative(xi * xi + s); }, breaks(s), xi_max());
    };
    return 4 * exp_sinh<double>().integrate(inner, x0(), kInf, 1e-10) / (2 * kPi);
  }
};

// gamma_0 for the free line and W = |x|^-3: (2/pi) C lambda^{-5/6} / 6 with
// C = int_0^inf [1 - sqrt(1 - y^-3)_+] dy.
double free_gamma0(double lambda) {
  const double c =
      1 + exp_sinh<double>().integrate([](double y) { return 1 - std::sqrt(1 - std::pow(y, -3)); }, 1.0, kInf, 1e-14);
  return 2 / kPi * c / 6 * std::pow(lambda, -5.0 / 6);
}

CoefficientOptions fast_options(int bz = 1024) {
  CoefficientOptions o;
  o.bz_resolution = bz;
  return o;
}

TEST(Coefficients, FreeLeadingMatchesCrossQuadrature) {
  const FreeOracle oracle{{1.0, 0.5}, 1.0, 0.0};
  const CoefficientResult r = compute_coefficients(bump_function(1.0, 0.5), free_problem(), decay_1d(3, 1));
  const double expected = oracle.a0();
  EXPECT_NEAR(r.a0, expected, 1e-6 * std::abs(expected));
  EXPECT_EQ(r.a1, 0.0);
  EXPECT_LT(r.a0, 0);
  EXPECT_LE(r.a0_error, 1e-5 * std::abs(r.a0));
}

TEST(Coefficients, FreeSubleadingMatchesCrossQuadrature) {
  const FreeOracle oracle{{1.0, 0.5}, 1.0, 0.5};
  const CoefficientResult r = compute_coefficients(bump_function(1.0, 0.5), free_problem(), decay_1d(3, 1, 0.5));
  const double expected = oracle.a1();
  EXPECT_NEAR(r.a1, expected, 1e-6 * std::abs(expected));
  EXPECT_TRUE(std::isfinite(r.a1_error));
}

TEST(Coefficients, OffCentreWindow) {
  const FreeOracle oracle{{0.7, 0.3}, 2.0, 0.0};
  const CoefficientResult r = compute_coefficients(bump_function(0.7, 0.3), free_problem(), decay_1d(3, 2));
  EXPECT_NEAR(r.a0, oracle.a0(), 1e-6 * std::abs(r.a0));
}

TEST(Coefficients, ZeroFunction) {
  const CoefficientResult r = compute_coefficients(zero_function(), free_problem(), decay_1d(3, 1, 0.5), fast_options());
  EXPECT_EQ(r.a0, 0.0);
  EXPECT_EQ(r.a1, 0.0);
}

TEST(Coefficients, Linearity) {
  const Problem p = mathieu_problem();
  const DecayPotential w = decay_1d(3, 1, 0.5);
  const CompactFunction f = bump_function(1.0, 0.5), g = bump_function(2.0, 0.2);
  const CoefficientOptions o = fast_options();
  const CoefficientResult rf = compute_coefficients(f, p, w, o);
  const CoefficientResult rg = compute_coefficients(g, p, w, o);
  const CoefficientResult rc = compute_coefficients(combine(2.0, f, -3.0, g), p, w, o);
  EXPECT_NEAR(rc.a0, 2 * rf.a0 - 3 * rg.a0, 1e-10 * (std::abs(rf.a0) + std::abs(rg.a0)));
  EXPECT_NEAR(rc.a1, 2 * rf.a1 - 3 * rg.a1, 1e-10 * (std::abs(rf.a1) + std::abs(rg.a1)));
}

TEST(Coefficients, UnboundedSupportRejected) {
  CompactFunction f = bump_function(1.0, 0.5);
  f.hi = kInf;
  EXPECT_THROW(compute_coefficients(f, free_problem(), decay_1d(3, 1), fast_options()), ValidationError);
}

TEST(Coefficients, BandTruncationRejected) {
  CoefficientOptions o = fast_options();
  o.p_max = 1;
  EXPECT_THROW(compute_coefficients(bump_function(1.0, 0.5), free_problem(), decay_1d(3, 1), o), BandTruncationError);
}

TEST(Coefficients, ReferenceRouteAgrees) {
  const Problem p = mathieu_problem();
  const DecayPotential w = decay_1d(3, 1, 0.5);
  const CompactFunction f = bump_function(1.0, 0.5);
  const CoefficientOptions o = fast_options();
  const double M = choose_M(f.lo, f.hi, p.potential().sup_bound());
  const ReferenceData ref = build_reference(w, M, largest_admissible_h(w, M));
  const CoefficientResult direct = compute_coefficients(f, p, w, o);
  const CoefficientResult via_ref = reference_coefficients(f, p, ref, o);
  EXPECT_NEAR(via_ref.a0, direct.a0, 1e-8 * std::abs(direct.a0));
  EXPECT_NEAR(via_ref.a1, direct.a1, 1e-8 * std::abs(direct.a1));
}

TEST(Coefficients, ChiIndependence) {
  const Problem p = free_problem();
  const DecayPotential w = decay_1d(3, 1, 0.5);
  const CompactFunction f = bump_function(1.0, 0.5);
  const CoefficientOptions o = fast_options();
  const double M = choose_M(f.lo, f.hi, 0);
  const double h = largest_admissible_h(w, M);
  ReferenceOptions narrow;
  narrow.chi.plateau = 0.25;
  narrow.r1 = 0.8;
  const CoefficientResult r1 = reference_coefficients(f, p, build_reference(w, M, h), o);
  const CoefficientResult r2 = reference_coefficients(f, p, build_reference(w, M, h, narrow), o);
  EXPECT_NEAR(r1.a0, r2.a0, 1e-10 * std::abs(r1.a0));
  EXPECT_NEAR(r1.a1, r2.a1, 1e-10 * std::abs(r1.a1));
}

TEST(ShiftTransform, BelowSupportLeadingTransform) {
  // Below supp f the f(lambda) term drops out; compare with direct Gauss-Kronrod in u.
  const CompactFunction f = bump_function(1.0, 0.5);
  const double lambda = 0.2, s = 1.0 / 3;
  const double expected = gauss_kronrod<double, 61>::integrate(
      [&](double u) { return f(lambda + u) * std::pow(u, -s - 1); }, 0.3, 1.3, 20, 1e-14);
  EXPECT_NEAR(shift_transform0(f, lambda, s), expected, 1e-10 * std::abs(expected));
}

TEST(Gamma, FreeClosedForm) {
  const Problem p = free_problem();
  const DecayPotential w = decay_1d(3, 1);
  const EnergyWindow window{0.5, 1.5};
  const DosTable dos = gamma_dos_table(p, 1.6, 5e-4, 16384);
  for (double lambda : {0.6, 1.0, 1.4}) {
    EXPECT_NEAR(gamma(0, lambda, w, dos, window), free_gamma0(lambda), 1e-4) << lambda;
  }
}

TEST(Gamma, ZeroBelowSpectrum) {
  const Problem p = mathieu_problem();
  const DecayPotential w = decay_1d(3, 1, 0.5);
  const EnergyWindow window{-3.0, -2.0};
  const DosTable dos = gamma_dos_table(p, -1.9, 5e-3, 1024);
  EXPECT_EQ(gamma(0, -2.5, w, dos, window), 0.0);
  EXPECT_EQ(gamma(1, -2.5, w, dos, window), 0.0);
}

TEST(Gamma, SubleadingVanishesWithoutW1) {
  const Problem p = free_problem();
  const EnergyWindow window{0.5, 1.5};
  const DosTable dos = gamma_dos_table(p, 1.6, 2e-3, 2048);
  EXPECT_EQ(gamma(1, 1.0, decay_1d(3, 1), dos, window), 0.0);
}

TEST(Gamma, OutsideWindowThrows) {
  const Problem p = free_problem();
  const DosTable dos = gamma_dos_table(p, 1.6, 2e-3, 2048);
  EXPECT_THROW(gamma(0, 1.55, decay_1d(3, 1), dos, EnergyWindow{0.5, 1.5}), OutOfWindowError);
}

TEST(Gamma, ContinuityImprovesWithGrid) {
  const Problem p = free_problem();
  const DecayPotential w = decay_1d(3, 1);
  const EnergyWindow window{0.5, 1.5};
  const DosTable dos = gamma_dos_table(p, 1.6, 1e-3, 8192);
  double previous_jump = kInf;
  for (int points : {11, 41, 161}) {
    const GammaTable t = gamma_table(uniform_energies(0.8, 1.2, points), w, dos, window);
    double jump = 0;
    for (std::size_t i = 1; i < t.gamma0.size(); ++i) jump = std::max(jump, std::abs(t.gamma0[i] - t.gamma0[i - 1]));
    EXPECT_LT(jump, previous_jump);
    previous_jump = jump;
  }
}

TEST(Duality, FreeLine) {
  const Problem p = free_problem();
  const DecayPotential w = decay_1d(3, 1);
  const CompactFunction f = bump_function(1.0, 0.5);
  const DosTable dos = gamma_dos_table(p, 1.6, 5e-4, 16384);
  const DualityReport d = duality_check(f, EnergyWindow{0.5, 1.5}, p, w, dos);
  EXPECT_LE(d.residual0, 1e-5 * std::abs(d.a0));
  EXPECT_EQ(d.residual1, 0.0);
}

TEST(Duality, ZeroFunction) {
  const Problem p = free_problem();
  const DosTable dos = gamma_dos_table(p, 1.6, 2e-3, 1024);
  CompactFunction zero = zero_function();
  zero.lo = 0.6;
  zero.hi = 1.4;
  const DualityReport d = duality_check(zero, EnergyWindow{0.5, 1.5}, p, decay_1d(3, 1), dos);
  EXPECT_EQ(d.residual0, 0.0);
  EXPECT_EQ(d.residual1, 0.0);
}

TEST(Duality, MathieuCertifiedWindow) {
  const Problem p = mathieu_problem();
  const DecayPotential w = decay_1d(3, 1, 0.5);
  const EnergyWindow window{-1.0691, -1.0678};
  const auto cert = certify_window(p, window.a, window.b, bz_grid(p.dual(), 512), 3.0, 1.0);
  ASSERT_TRUE(cert.certified) << cert.reason;
  const CompactFunction f = bump_function(-1.06845, 6e-4);
  const DosTable dos = gamma_dos_table(p, window.b + 1e-3, 1e-5, 32768);
  const DualityReport d = duality_check(f, window, p, w, dos);
  EXPECT_LE(d.residual0, 1e-4 * std::abs(d.a0));
  EXPECT_LE(d.residual1, 1e-4 * std::abs(d.a1));
}

}  // namespace
}  // namespace bandshift
