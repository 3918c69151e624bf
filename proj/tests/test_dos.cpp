#include <gtest/gtest.h>

#include <numbers>

#include "bandshift/dos.hpp"
#include "support.hpp"

namespace bandshift {
namespace {

using testing::free_problem;
using testing::mathieu_problem;

constexpr double kPi = std::numbers::pi;

// Gap between the first two Mathieu bands from band extrema on a fine grid.
std::pair<double, double> mathieu_first_gap(const Problem& p) {
  const BandSamples s = sample_bands(p, bz_grid(p.dual(), 512), 2);
  return {s.band_max(1), s.band_min(2)};
}

TEST(Ids, BelowSpectrumIsZero) {
  const Problem p = mathieu_problem();
  EXPECT_EQ(ids(p, -5.0, bz_grid(p.dual(), 64), 3), 0.0);
}

TEST(Ids, FreeQuarter) {
  const Problem p = free_problem();
  EXPECT_NEAR(ids(p, 0.25, bz_grid(p.dual(), 4096), 4), std::sqrt(0.25) / kPi, 5e-4);
}

TEST(Ids, FreeLawOnInterval) {
  const Problem p = free_problem();
  const BandSamples s = sample_bands(p, bz_grid(p.dual(), 4096), 4);
  for (int i = 0; i <= 90; ++i) {
    const double lambda = 0.1 + 0.01 * i;
    EXPECT_LE(std::abs(ids(s, lambda) - std::sqrt(lambda) / kPi), 5e-3) << lambda;
  }
}

TEST(Ids, Nondecreasing) {
  const Problem p = mathieu_problem();
  const BandSamples s = sample_bands(p, bz_grid(p.dual(), 256), 5);
  double previous = -1;
  for (const double lambda : uniform_energies(-2.0, 4.0, 200)) {
    const double v = ids(s, lambda);
    EXPECT_GE(v, previous);
    previous = v;
  }
}

TEST(Ids, MathieuConstantInGap) {
  const Problem p = mathieu_problem();
  const auto [lo, hi] = mathieu_first_gap(p);
  ASSERT_LT(lo, hi);
  const auto grid = bz_grid(p.dual(), 512);
  const double a = lo + 0.25 * (hi - lo), b = lo + 0.75 * (hi - lo);
  EXPECT_DOUBLE_EQ(ids(p, a, grid, 3), ids(p, b, grid, 3));
  // One full band below the gap.
  EXPECT_NEAR(ids(p, a, grid, 3), 1 / (2 * kPi), 1e-15);
}

TEST(Ids, GridErrorBoundedByCrossings) {
  // Band 2 crosses lambda at two k; each misplaced grid point weighs 1/(2 pi res).
  const Problem p = free_problem();
  const double lambda = 0.37;
  const double exact = std::sqrt(lambda) / kPi;
  for (int res : {64, 256, 1024, 4096}) {
    const double err = std::abs(ids(p, lambda, bz_grid(p.dual(), res), 4) - exact);
    EXPECT_LE(err, 2 / (2 * kPi * res) + 1e-15) << res;
  }
}

TEST(Ids, TruncatedBandsThrow) {
  const Problem p = free_problem();
  EXPECT_THROW(ids(p, 3.0, bz_grid(p.dual(), 64), 2), BandTruncationError);
}

TEST(Dos, FreeDensity) {
  const Problem p = free_problem();
  const auto energies = uniform_energies(0.05, 1.05, 401);
  const DosTable t = dos_density(p, energies, bz_grid(p.dual(), 2048), 4);
  for (std::size_t i = 0; i < energies.size(); ++i) {
    if (energies[i] < 0.1 || energies[i] > 1.0) continue;
    EXPECT_NEAR(t.rho_prime[i], 1 / (2 * kPi * std::sqrt(energies[i])), 2e-3) << energies[i];
  }
}

TEST(Dos, VanishesInGap) {
  const Problem p = mathieu_problem();
  const auto [lo, hi] = mathieu_first_gap(p);
  const auto energies = uniform_energies(lo + 0.4 * (hi - lo), lo + 0.6 * (hi - lo), 11);
  const DosTable t = dos_density(p, energies, bz_grid(p.dual(), 1024), 3, 0.005);
  for (double v : t.rho_prime) EXPECT_LE(v, 1e-6);
}

TEST(Dos, SmoothIdsIsAntiderivative) {
  const Problem p = mathieu_problem();
  const auto energies = uniform_energies(-1.4, 1.5, 581);
  const DosTable t = dos_density(p, energies, bz_grid(p.dual(), 1024), 4);
  // Trapezoid sums of the Gaussian density against the exact smoothed IDS increments.
  for (std::size_t i = 1; i < energies.size(); ++i) {
    const double dx = energies[i] - energies[i - 1];
    // Composite Simpson on a refined sub-grid evaluated through the Hermite interpolant.
    double integral = 0;
    const int m = 16;
    for (int j = 0; j <= m; ++j) {
      const double x = energies[i - 1] + dx * j / m;
      const double w = (j == 0 || j == m) ? 1 : (j % 2 ? 4 : 2);
      integral += w * t.smooth_density(x);
    }
    integral *= dx / (3 * m);
    EXPECT_NEAR(integral, t.rho_smooth[i] - t.rho_smooth[i - 1], 1e-6);
  }
  EXPECT_TRUE(t.starts_below_spectrum());
  EXPECT_NEAR(t.smooth_ids(-1.5), 0.0, 0.0);
}

TEST(Dos, RejectsNonUniformEnergies) {
  const Problem p = free_problem();
  EXPECT_THROW(dos_density(p, {0.1, 0.2, 0.4}, bz_grid(p.dual(), 16), 3), ValidationError);
}

TEST(FermiSurface, FreeBand) {
  const Problem p = free_problem();
  const auto fs = fermi_surface(p, 0.09, bz_grid(p.dual(), 64), 2);
  ASSERT_EQ(fs.points.size(), 2u);
  std::vector<double> ks;
  for (const auto& pt : fs.points) {
    EXPECT_EQ(pt.band, 1);
    ks.push_back(pt.k(0));
  }
  std::sort(ks.begin(), ks.end());
  EXPECT_NEAR(ks[0], -0.3, 1e-9);
  EXPECT_NEAR(ks[1], 0.3, 1e-9);
}

TEST(FermiSurface, EmptyInGap) {
  const Problem p = mathieu_problem();
  const auto [lo, hi] = mathieu_first_gap(p);
  EXPECT_TRUE(fermi_surface(p, 0.5 * (lo + hi), bz_grid(p.dual(), 64), 3).points.empty());
}

TEST(FermiSurface, MathieuMidBandSymmetric) {
  const Problem p = mathieu_problem();
  const BandSamples s = sample_bands(p, bz_grid(p.dual(), 128), 2);
  const double lambda = 0.5 * (s.band_min(1) + s.band_max(1));
  const auto fs = fermi_surface(p, s, lambda);
  ASSERT_EQ(fs.points.size(), 2u);
  EXPECT_NEAR(fs.points[0].k(0), -fs.points[1].k(0), 1e-9);
  for (const auto& pt : fs.points) EXPECT_NEAR(solve_bands(p, pt.k, 1).values(0), lambda, 1e-9);
}

TEST(Certify, FreeWindow) {
  const Problem p = free_problem();
  const auto cert = certify_window(p, 0.04, 0.16, bz_grid(p.dual(), 256), 3.0, 1.0);
  ASSERT_TRUE(cert.certified) << cert.reason;
  EXPECT_NEAR(cert.min_gradient_norm, 0.4, 1e-8);
  EXPECT_NEAR(cert.min_laplacian, 2.0, 1e-6);
  EXPECT_GT(cert.non_trapping_c0, 0);
  EXPECT_GT(cert.min_band_gap, 0);
  EXPECT_GT(cert.fermi_points, 0);
}

TEST(Certify, BandEdgeRejected) {
  const Problem p = free_problem();
  const auto cert = certify_window(p, -0.1, 0.16, bz_grid(p.dual(), 256), 3.0, 1.0);
  EXPECT_FALSE(cert.certified);
  EXPECT_NE(cert.reason.find("gradient vanishes"), std::string::npos);
}

TEST(Certify, MathieuAboveBandBottom) {
  const Problem p = mathieu_problem();
  const auto grid = bz_grid(p.dual(), 256);
  const BandSamples s = sample_bands(p, grid, 1);
  const double bottom = s.band_min(1), width = s.band_max(1) - bottom;
  const double a = bottom + 0.25 * width, b = bottom + 0.45 * width;
  const auto cert = certify_window(p, a, b, grid, 3.0, 1.0);
  ASSERT_TRUE(cert.certified) << cert.reason;
  // Grid-minimum oracle for c0 over lambda_1(k) <= b with the affine bracket in the shift.
  double c0 = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const Eigen::VectorXd k = grid.points.col(i);
    const double l1 = solve_bands(p, k, 1).values(0);
    if (l1 > b) continue;
    const double g2 = band_gradient(p, k, 1).squaredNorm();
    const double lap = band_laplacian(p, k, 1);
    const double u_lo = std::max(0.0, a - l1), u_hi = b - l1;
    c0 = std::min(c0, g2 + 3.0 * std::min(u_lo * lap, u_hi * lap));
  }
  EXPECT_LE(cert.non_trapping_c0, c0 + 1e-9);
  EXPECT_GT(cert.non_trapping_c0, 0.5 * c0);
}

TEST(Certify, MathieuUpperHalfRejected) {
  const Problem p = mathieu_problem();
  const BandSamples s = sample_bands(p, bz_grid(p.dual(), 256), 1);
  const double bottom = s.band_min(1), width = s.band_max(1) - bottom;
  const auto cert = certify_window(p, bottom + 0.6 * width, bottom + 0.8 * width, bz_grid(p.dual(), 256), 3.0, 1.0);
  EXPECT_FALSE(cert.certified);
}

TEST(Certify, CertifiedWindowInvariants) {
  const Problem p = free_problem();
  const auto grid = bz_grid(p.dual(), 256);
  const auto cert = certify_window(p, 0.05, 0.2, grid, 3.0, 1.0);
  ASSERT_TRUE(cert.certified);
  for (const double lambda : uniform_energies(0.05, 0.2, 9)) {
    const auto fs = fermi_surface(p, lambda, grid, 2);
    EXPECT_FALSE(fs.points.empty());
    for (const auto& pt : fs.points) {
      const auto v = solve_bands(p, pt.k, 2).values;
      EXPECT_GT(v(1) - v(0), 0);
    }
  }
}

}  // namespace
}  // namespace bandshift
