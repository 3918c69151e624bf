#include <gtest/gtest.h>

#include "bandshift/perturbation.hpp"
#include "support.hpp"

namespace bandshift {
namespace {

using testing::decay_1d;

Eigen::VectorXd x1(double x) { return Eigen::VectorXd::Constant(1, x); }

TEST(DecayPotential, PurePower) {
  const DecayPotential w = decay_1d(3, 1);
  EXPECT_DOUBLE_EQ(eval_W(w, x1(2)), 0.125);
  EXPECT_DOUBLE_EQ(eval_W(w, x1(-2)), 0.125);
}

TEST(DecayPotential, SubleadingTerm) {
  const DecayPotential w = decay_1d(3, 1, 0.5);
  EXPECT_NEAR(eval_W(w, x1(10)), 1.05e-3, 1e-18);
}

TEST(DecayPotential, CorePositive) {
  const DecayPotential w = decay_1d(3, 1);
  EXPECT_GT(eval_W(w, x1(0)), 0);
  for (double r = 0; r < 2; r += 0.01) EXPECT_GT(eval_W(w, x1(r)), 0);
}

TEST(DecayPotential, TwoDimensionalAngularProfile) {
  std::vector<AngularCoefficients::Profile> profiles{
      [](const Eigen::VectorXd& t) { return 1.0 + 0.5 * t(0) * t(0); }};
  const DecayPotential w(3, AngularCoefficients(2, profiles));
  const Eigen::Vector2d x(3, 4);
  EXPECT_NEAR(eval_W(w, x), (1 + 0.5 * 0.36) * std::pow(5.0, -3), 1e-16);
  EXPECT_NEAR(w.angular().w0_min(), 1.0, 1e-3);
  EXPECT_NEAR(w.angular().w0_max(), 1.5, 1e-3);
}

TEST(DecayPotential, RejectsDeltaNotAboveDimension) {
  EXPECT_THROW(decay_1d(1.0, 1), ValidationError);
  EXPECT_THROW(DecayPotential(2.0, AngularCoefficients::constants(2, {1.0})), ValidationError);
}

TEST(DecayPotential, RejectsNonPositiveLeadingCoefficient) {
  EXPECT_THROW(decay_1d(3, 0.0), ValidationError);
  EXPECT_THROW(decay_1d(3, -1.0), ValidationError);
}

TEST(ChooseM, RuleValues) {
  EXPECT_DOUBLE_EQ(choose_M(0, 1, 2), 13);
  EXPECT_DOUBLE_EQ(choose_M(-1, 1, 0), 9);
}

TEST(ChooseM, MonotoneInWindow) {
  double previous = 0;
  for (double b = 0.1; b < 5; b += 0.1) {
    const double m = choose_M(-0.5, b, 1.0);
    EXPECT_GE(m, previous);
    previous = m;
  }
}

TEST(Reference, DefaultRadii) {
  const DecayPotential w = decay_1d(3, 1);
  const ReferenceData ref = build_reference(w, 9, largest_admissible_h(w, 9));
  EXPECT_LT(ref.r1(), 1);
  EXPECT_GT(ref.r2(), 1);
}

TEST(Reference, OutsideCutoffIsScaledPotential) {
  const DecayPotential w = decay_1d(3, 1, 0.5);
  const double h = largest_admissible_h(w, 9);
  const ReferenceData ref = build_reference(w, 9, h);
  for (double r : {0.6, 1.0, 3.0, 10.0}) {
    const Eigen::VectorXd x = x1(r);
    ASSERT_EQ(ref.chi(x), 0.0);
    EXPECT_DOUBLE_EQ(ref.phi(x, h), std::pow(h, -3) * eval_W(w, Eigen::VectorXd(x / h)));
  }
}

TEST(Reference, SupportInclusions) {
  const DecayPotential w = decay_1d(3, 1);
  const double M = 9;
  const double h = largest_admissible_h(w, M);
  const ReferenceData ref = build_reference(w, M, h);
  const double mu = ref.mu();
  // supp W~ within supp chi(h .) within {mu W > M}.
  for (int i = -4000; i <= 4000; ++i) {
    const double x = 0.005 * i;
    const Eigen::VectorXd y = x1(x);
    const double c = ref.chi(Eigen::VectorXd(h * y));
    if (ref.w_tilde(y) != 0) {
      EXPECT_GT(c, 0);
    }
    if (c > 0) {
      EXPECT_GT(mu * eval_W(w, y), M);
    }
  }
}

TEST(Reference, TooLargeHRejected) {
  const DecayPotential w = decay_1d(3, 1);
  EXPECT_THROW(build_reference(w, 9, 8.0), HTooLargeError);
}

TEST(Reference, ExpansionMatchesPhi) {
  const DecayPotential w = decay_1d(3, 1, 0.5);
  const double h = largest_admissible_h(w, 9);
  const ReferenceData ref = build_reference(w, 9, h);
  // Outside the core of W(./h) the expansion is exact since the remainder vanishes.
  for (double r : {0.5, 0.8, 1.5, 4.0}) {
    const Eigen::VectorXd x = x1(r);
    if (r / h < 1) continue;
    EXPECT_NEAR(ref.phi_expansion(x, h), ref.phi(x, h), 1e-12 * ref.phi(x, h));
  }
}

TEST(Reference, ThetaProperties) {
  const DecayPotential w = decay_1d(3, 1);
  const ReferenceData ref = build_reference(w, 12, largest_admissible_h(w, 12));
  for (double t = 6; t < 40; t += 0.37) {
    EXPECT_EQ(ref.theta(t), t);
    EXPECT_EQ(ref.Phi(t), 0.0);
  }
  double previous = 0;
  for (double t = -5; t < 6; t += 0.01) {
    const double th = ref.theta(t);
    EXPECT_GE(th, 4.0 - 1e-12);
    EXPECT_GE(th, previous - 1e-12);
    previous = th;
  }
  // Continuity at M/2 from below.
  EXPECT_NEAR(ref.theta(6 - 1e-9), 6.0, 1e-8);
}

TEST(Structure, FixedPointOutsideCutoff) {
  const DecayPotential w = decay_1d(2, 1);
  const ReferenceData ref = build_reference(w, 9, largest_admissible_h(w, 9));
  const Eigen::VectorXd x = x1(10);
  ASSERT_EQ(ref.chi(x), 0.0);
  EXPECT_NEAR(ref.phi0(x), 0.01, 1e-15);
}

TEST(Structure, VerificationReport) {
  const DecayPotential w = decay_1d(3, 1, 0.5);
  const ReferenceData ref = build_reference(w, 9, largest_admissible_h(w, 9));
  const StructureReport s = verify_structure(ref, structure_samples(ref));
  EXPECT_LE(s.euler_residual, 1e-8);
  EXPECT_LE(s.phi0_deviation, 1e-12);
  EXPECT_GT(s.min_leading_minus_M, 0);
  EXPECT_GE(s.min_phi0_minus_M, 0);
  EXPECT_GT(s.min_transition_phi0_minus_M, 0);
  EXPECT_GT(s.outside_points, 0);
  EXPECT_GT(s.below_M_points, 0);
  EXPECT_GT(s.support_points, 0);
  EXPECT_EQ(s.theta_identity_error, 0.0);
  EXPECT_GE(s.theta_min, 3.0 - 1e-12);
}

TEST(Structure, AsymmetricAngularProfile) {
  const DecayPotential w(3, AngularCoefficients::one_dimensional({{1.0, 2.0}}));
  const ReferenceData ref = build_reference(w, 9, largest_admissible_h(w, 9));
  const StructureReport s = verify_structure(ref, structure_samples(ref));
  EXPECT_LE(s.euler_residual, 1e-8);
  EXPECT_LE(s.phi0_deviation, 1e-12);
  EXPECT_GT(s.min_leading_minus_M, 0);
}

TEST(Structure, TwoDimensional) {
  std::vector<AngularCoefficients::Profile> profiles{
      [](const Eigen::VectorXd& t) { return 1.0 + 0.3 * t(0) * t(1); }};
  const DecayPotential w(3, AngularCoefficients(2, profiles));
  const ReferenceData ref = build_reference(w, 9, largest_admissible_h(w, 9));
  const StructureReport s = verify_structure(ref, structure_samples(ref, 100));
  EXPECT_LE(s.euler_residual, 1e-8);
  EXPECT_LE(s.phi0_deviation, 1e-12);
  EXPECT_GT(s.min_leading_minus_M, 0);
}

}  // namespace
}  // namespace bandshift
