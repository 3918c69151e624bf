#include "bandshift/dos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <utility>

#include "bandshift/parallel.hpp"
#include "bandshift/smooth.hpp"

namespace bandshift {

namespace {

constexpr double kKernelReach = 8.0;  // Gaussian tails beyond 8 sigma are dropped

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

std::vector<int> grid_strides(const Grid& grid) {
  std::vector<int> stride(grid.resolution.size(), 1);
  for (std::size_t a = 1; a < stride.size(); ++a) stride[a] = stride[a - 1] * grid.resolution[a - 1];
  return stride;
}

double band_value(const Problem& problem, const Eigen::VectorXd& k, int band) {
  return solve_bands(problem, k, band).values(band - 1);
}

}  // namespace

double BandSamples::normalization() const { return std::pow(2 * std::numbers::pi, -dimension); }

BandSamples sample_bands(const Problem& problem, const Grid& grid, int p_max, int threads) {
  if (grid.dimension() != problem.dimension()) throw ValidationError("grid and problem dimensions differ");
  if (p_max < 1 || p_max > problem.basis_size())
    throw BandTruncationError("p_max must lie in [1, basis size]; increase bloch.g_max");
  BandSamples samples;
  samples.grid = grid;
  samples.dimension = problem.dimension();
  samples.values.resize(p_max, grid.size());
  parallel_for(grid.size(), threads, [&](std::ptrdiff_t i) {
    samples.values.col(i) = solve_bands(problem, grid.points.col(i), p_max).values;
  });
  return samples;
}

double ids(const BandSamples& samples, double lambda) {
  const int p_max = samples.p_max();
  if (!(samples.band_min(p_max) > lambda))
    throw BandTruncationError("ids: band " + std::to_string(p_max) + " reaches below lambda = " +
                              std::to_string(lambda) + "; increase p_max");
  double total = 0;
  for (Eigen::Index k = 0; k < samples.values.cols(); ++k) {
    int count = 0;
    for (int p = 0; p < p_max; ++p) count += samples.values(p, k) <= lambda;
    total += samples.grid.weights(k) * count;
  }
  return samples.normalization() * total;
}

double ids(const Problem& problem, double lambda, const Grid& grid, int p_max) {
  return ids(sample_bands(problem, grid, p_max), lambda);
}

std::vector<double> uniform_energies(double lo, double hi, int points) {
  if (points < 2 || !(hi > lo)) throw ValidationError("energy grid needs points >= 2 and max > min");
  std::vector<double> e(points);
  for (int i = 0; i < points; ++i) e[i] = lo + (hi - lo) * i / (points - 1);
  return e;
}

bool DosTable::starts_below_spectrum() const {
  return !energies.empty() && energies.front() <= spectrum_min - 10 * kernel_width;
}

namespace {

// Locates lambda on the uniform table: returns segment index and local coordinate in [0, 1].
std::pair<std::size_t, double> locate(const DosTable& table, double lambda) {
  const double de = table.spacing();
  const double t = (lambda - table.energies.front()) / de;
  const auto last = table.energies.size() - 2;
  std::size_t i = t <= 0 ? 0 : std::min<std::size_t>(static_cast<std::size_t>(t), last);
  return {i, t - static_cast<double>(i)};
}

void check_table_range(const DosTable& table, double lambda) {
  if (lambda > table.energies.back() * (1 + 1e-14) + 1e-14)
    throw OutOfWindowError("energy " + std::to_string(lambda) + " lies above the DOS table");
}

}  // namespace

double DosTable::smooth_ids(double lambda) const {
  if (energies.size() < 2) throw ValidationError("DOS table needs at least two energies");
  if (lambda < energies.front()) {
    if (starts_below_spectrum()) return 0;
    throw OutOfWindowError("energy " + std::to_string(lambda) + " lies below the DOS table");
  }
  check_table_range(*this, lambda);
  const auto [i, t] = locate(*this, lambda);
  const double de = spacing();
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * rho_smooth[i] + (t3 - 2 * t2 + t) * de * rho_prime[i] +
         (-2 * t3 + 3 * t2) * rho_smooth[i + 1] + (t3 - t2) * de * rho_prime[i + 1];
}

double DosTable::smooth_density(double lambda) const {
  if (energies.size() < 2) throw ValidationError("DOS table needs at least two energies");
  if (lambda < energies.front()) {
    if (starts_below_spectrum()) return 0;
    throw OutOfWindowError("energy " + std::to_string(lambda) + " lies below the DOS table");
  }
  check_table_range(*this, lambda);
  const auto [i, t] = locate(*this, lambda);
  const double de = spacing();
  const double t2 = t * t;
  return ((6 * t2 - 6 * t) * rho_smooth[i] + (-6 * t2 + 6 * t) * rho_smooth[i + 1]) / de +
         (3 * t2 - 4 * t + 1) * rho_prime[i] + (3 * t2 - 2 * t) * rho_prime[i + 1];
}

DosTable dos_density(const BandSamples& samples, const std::vector<double>& energies, double kernel_width) {
  if (energies.size() < 2) throw ValidationError("dos_density: need at least two energies");
  const double de = energies[1] - energies[0];
  for (std::size_t i = 1; i < energies.size(); ++i) {
    const double step = energies[i] - energies[i - 1];
    if (!(step > 0) || std::abs(step - de) > 1e-9 * std::max(std::abs(de), 1e-300) + 1e-12)
      throw ValidationError("dos_density: energies must form an increasing uniform grid");
  }
  DosTable table;
  table.energies = energies;
  table.kernel_width = kernel_width > 0 ? kernel_width : 4 * de;
  const double sigma = table.kernel_width;
  const int p_max = samples.p_max();
  if (!(samples.band_min(p_max) > energies.back() + kKernelReach * sigma))
    throw BandTruncationError("dos_density: band " + std::to_string(p_max) +
                              " enters the energy range; increase p_max");

  // Flatten and sort samples; prefix sums of weights give the counting IDS.
  std::vector<std::pair<double, double>> flat;
  flat.reserve(samples.values.size());
  for (Eigen::Index k = 0; k < samples.values.cols(); ++k)
    for (int p = 0; p < p_max; ++p) flat.emplace_back(samples.values(p, k), samples.grid.weights(k));
  std::sort(flat.begin(), flat.end());
  std::vector<double> prefix(flat.size() + 1, 0.0);
  for (std::size_t i = 0; i < flat.size(); ++i) prefix[i + 1] = prefix[i] + flat[i].second;
  table.spectrum_min = flat.empty() ? 0 : flat.front().first;

  const double norm = samples.normalization();
  auto below = [&](double e, bool inclusive) {
    const auto it = inclusive
                        ? std::upper_bound(flat.begin(), flat.end(), e,
                                           [](double v, const auto& s) { return v < s.first; })
                        : std::lower_bound(flat.begin(), flat.end(), e,
                                           [](const auto& s, double v) { return s.first < v; });
    return static_cast<std::size_t>(it - flat.begin());
  };

  const std::size_t m = energies.size();
  table.rho.resize(m);
  table.rho_prime.resize(m);
  table.rho_smooth.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double e = energies[i];
    table.rho[i] = norm * prefix[below(e, true)];
    const std::size_t lo = below(e - kKernelReach * sigma, false);
    const std::size_t hi = below(e + kKernelReach * sigma, true);
    double density = 0, cumulative = prefix[lo];
    for (std::size_t j = lo; j < hi; ++j) {
      const double x = e - flat[j].first;
      density += flat[j].second * gaussian(x, sigma);
      cumulative += flat[j].second * normal_cdf(x / sigma);
    }
    table.rho_prime[i] = norm * density;
    table.rho_smooth[i] = norm * cumulative;
  }
  return table;
}

DosTable dos_density(const Problem& problem, const std::vector<double>& energies, const Grid& grid, int p_max,
                     double kernel_width, int threads) {
  return dos_density(sample_bands(problem, grid, p_max, threads), energies, kernel_width);
}

FermiSurfaceSample fermi_surface(const Problem& problem, const BandSamples& samples, double lambda, double tol) {
  if (!(tol > 0)) throw ValidationError("fermi_surface: tol must be positive");
  FermiSurfaceSample result;
  result.lambda = lambda;
  const Grid& grid = samples.grid;
  const int n = grid.dimension();
  const auto stride = grid_strides(grid);
  const Eigen::MatrixXd& dual = problem.dual().basis();
  std::vector<int> idx(n, 0);
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    for (int a = 0; a < n; ++a) {
      if (grid.resolution[a] < 2) continue;
      // Neighbour along axis a, wrapping through the zone boundary.
      const bool wraps = idx[a] + 1 == grid.resolution[a];
      const Eigen::Index j = wraps ? i - static_cast<Eigen::Index>(idx[a]) * stride[a] : i + stride[a];
      const Eigen::VectorXd k0 = grid.points.col(i);
      const Eigen::VectorXd k1 = wraps ? Eigen::VectorXd(grid.points.col(j) + dual.col(a)) : Eigen::VectorXd(grid.points.col(j));
      for (int p = 1; p <= samples.p_max(); ++p) {
        const double g0 = samples.values(p - 1, i) - lambda, g1 = samples.values(p - 1, j) - lambda;
        if ((g0 < 0) == (g1 < 0)) continue;
        double t0 = 0, t1 = 1;
        const bool rising = g0 < 0;
        const double length = (k1 - k0).norm();
        while ((t1 - t0) * length > tol) {
          const double t = 0.5 * (t0 + t1);
          const bool neg = band_value(problem, k0 + t * (k1 - k0), p) - lambda < 0;
          (neg == rising ? t0 : t1) = t;
        }
        const Eigen::VectorXd k = k0 + 0.5 * (t0 + t1) * (k1 - k0);
        result.points.push_back({reduce_to_bz(k, problem.dual()), p});
      }
    }
    for (int a = 0; a < n; ++a) {
      if (++idx[a] < grid.resolution[a]) break;
      idx[a] = 0;
    }
  }
  return result;
}

FermiSurfaceSample fermi_surface(const Problem& problem, double lambda, const Grid& grid, int p_max, double tol) {
  return fermi_surface(problem, sample_bands(problem, grid, p_max), lambda, tol);
}

WindowCertificate certify_window(const Problem& problem, double a, double b, const Grid& grid, double delta,
                                 double w0_min, const CertifyOptions& options) {
  if (!(a < b)) throw ValidationError("certify_window: need a < b");
  if (!(delta > 0)) throw ValidationError("certify_window: delta must be positive");
  if (!(w0_min > 0)) throw ValidationError("certify_window: w0 must be positive");
  if (options.energy_samples < 2) throw ValidationError("certify_window: need at least two energy samples");
  WindowCertificate cert;
  cert.a = a;
  cert.b = b;
  auto reject = [&](std::string reason) {
    cert.certified = false;
    cert.reason = std::move(reason);
    return cert;
  };

  const BandSamples samples = sample_bands(problem, grid, std::min<int>(2, static_cast<int>(problem.basis_size())));
  const double lo1 = samples.band_min(1), hi1 = samples.band_max(1);
  if (a - lo1 < options.edge_margin || hi1 - b < options.edge_margin)
    return reject("gradient vanishes at band edge");
  if (samples.p_max() > 1 && !(b < samples.band_min(2))) return reject("window overlaps the second band");

  BandSamples first = samples;
  first.values = samples.values.topRows(1);
  const double step = options.fd_step.value_or(default_fd_step(problem));

  double min_grad = std::numeric_limits<double>::infinity();
  double min_lap = std::numeric_limits<double>::infinity();
  double min_gap = std::numeric_limits<double>::infinity();
  double c0 = std::numeric_limits<double>::infinity();
  // Bracket |grad|^2 + delta u Laplacian is affine in the shift u in [u_lo, u_hi].
  auto bracket = [&](double grad2, double lap, double lambda1) {
    const double u_lo = std::max(0.0, a - lambda1), u_hi = b - lambda1;
    return grad2 + delta * std::min(u_lo * lap, u_hi * lap);
  };

  try {
    for (int s = 0; s < options.energy_samples; ++s) {
      const double lambda = a + (b - a) * s / (options.energy_samples - 1);
      const FermiSurfaceSample fs = fermi_surface(problem, first, lambda, options.fermi_tol);
      if (fs.points.empty()) return reject("empty Fermi surface at lambda = " + std::to_string(lambda));
      for (const auto& pt : fs.points) {
        const Eigen::VectorXd grad = band_gradient(problem, pt.k, 1);
        const double lap = band_laplacian(problem, pt.k, 1, std::optional<double>(step));
        const auto vals = solve_bands(problem, pt.k, 2).values;
        min_grad = std::min(min_grad, grad.norm());
        min_lap = std::min(min_lap, lap);
        min_gap = std::min(min_gap, vals(1) - vals(0));
        c0 = std::min(c0, bracket(grad.squaredNorm(), lap, lambda));
        ++cert.fermi_points;
      }
    }
    // Interior of the shell: grid points with lambda_1(k) <= b.
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      const double lambda1 = samples.values(0, i);
      if (lambda1 > b) continue;
      const Eigen::VectorXd k = grid.points.col(i);
      const Eigen::VectorXd grad = band_gradient(problem, k, 1);
      const double lap = band_laplacian(problem, k, 1, std::optional<double>(step));
      c0 = std::min(c0, bracket(grad.squaredNorm(), lap, lambda1));
    }
  } catch (const DegeneracyError& e) {
    return reject(std::string("first band is degenerate in the window: ") + e.what());
  }

  cert.min_gradient_norm = min_grad;
  cert.min_laplacian = min_lap;
  cert.min_band_gap = min_gap;
  cert.non_trapping_c0 = c0;
  if (!(min_grad > 0)) return reject("gradient vanishes on the Fermi surface");
  if (!(min_gap > 0)) return reject("first band is not isolated on the Fermi surface");
  if (!(min_lap > 0)) return reject("band Laplacian is not positive on the Fermi surface");
  if (!(c0 > 0)) return reject("non-trapping bracket is not positive on the energy shell");
  cert.certified = true;
  cert.reason.clear();
  return cert;
}

}  // namespace bandshift
