#include "bandshift/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "bandshift/errors.hpp"
#include "bandshift/parallel.hpp"
#include "bandshift/quadrature.hpp"

namespace bandshift {

namespace {

// Below this shift the difference f(l+u) - f(l) is replaced by u f'(l + u/2).
constexpr double kSmallShift = 1e-6;

double phase_space_factor(int n) { return std::pow(2 * std::numbers::pi, -n); }

std::vector<std::pair<Eigen::VectorXd, double>> angular_nodes(int n, int angular_points) {
  const SphereRule rule = sphere_rule(n, angular_points);
  std::vector<std::pair<Eigen::VectorXd, double>> nodes;
  for (std::size_t i = 0; i < rule.weights.size(); ++i)
    nodes.emplace_back(Eigen::Map<const Eigen::VectorXd>(rule.directions[i].data(), n), rule.weights[i]);
  return nodes;
}

TanhSinhOptions ts_options(double rel_tolerance) {
  TanhSinhOptions o;
  o.rel_tolerance = rel_tolerance;
  o.abs_tolerance = 1e-300;
  return o;
}

}  // namespace

AngularConstants angular_constants(const DecayPotential& potential, int angular_points) {
  const int n = potential.dimension();
  const double d = potential.delta();
  AngularConstants c;
  for (const auto& [theta, weight] : angular_nodes(n, angular_points)) {
    const double w0 = potential.angular().value(0, theta);
    const double w1 = potential.angular().value(1, theta);
    c.A += weight * std::pow(w0, n / d);
    c.B += weight * w1 * std::pow(w0, (n - 1) / d - 1);
  }
  c.A /= d;
  c.B /= d;
  return c;
}

double shift_transform0(const CompactFunction& f, double lambda, double s, double rel_tolerance) {
  const double lo = f.lo, hi = f.hi;
  if (lambda >= hi) return 0;
  const auto opts = ts_options(rel_tolerance);
  if (lambda <= lo) {
    const double a = lo - lambda, b = hi - lambda;
    return tanh_sinh([&](double u, double, double) { return f(lambda + u) * std::pow(u, -s - 1); }, a, b, opts)
        .value;
  }
  const double fl = f(lambda);
  const double U = hi - lambda;
  const double small = kSmallShift * (hi - lo);
  auto integrand = [&](double, double u, double) {
    if (u < small) return f.derivative(lambda + 0.5 * u) * std::pow(u, -s);
    return (f(lambda + u) - fl) * std::pow(u, -s - 1);
  };
  return tanh_sinh(integrand, 0, U, opts).value - fl * std::pow(U, -s) / s;
}

double shift_transform1(const CompactFunction& f, double lambda, int n, double delta, double rel_tolerance) {
  if (n == 1) return -f(lambda);
  if (lambda >= f.hi) return 0;
  const double alpha = (1.0 - n) / delta;
  const double a = std::max(0.0, f.lo - lambda), b = f.hi - lambda;
  return tanh_sinh([&](double, double da, double) {
           const double u = a + da;
           return f.derivative(lambda + u) * std::pow(u, alpha);
         },
                   a, b, ts_options(rel_tolerance))
      .value;
}

int band_cutoff(const Problem& problem, const Grid& grid, double energy, int threads) {
  const int basis = static_cast<int>(problem.basis_size());
  int p = std::min(4, basis);
  while (true) {
    const BandSamples samples = sample_bands(problem, grid, p, threads);
    for (int q = 1; q <= p; ++q)
      if (samples.band_min(q) > energy) return q;
    if (p == basis)
      throw BandTruncationError("every band of the plane-wave basis reaches below " + std::to_string(energy) +
                                "; increase bloch.g_max");
    p = std::min(2 * p, basis);
  }
}

namespace {

struct GridSums {
  double sum0 = 0, sum1 = 0;
  int p_cut = 0;
  double band1_min = 0;
};

// Sums of I0 and I1 over bands 1..p_cut-1 and grid points (weights included).
template <typename PerLambda>
GridSums band_grid_sums(const CompactFunction& f, const Problem& problem, int resolution,
                        const CoefficientOptions& options, PerLambda&& per_lambda) {
  const Grid grid = bz_grid(problem.dual(), resolution);
  GridSums out;
  int bands;
  if (options.p_max > 0) {
    bands = options.p_max;
    if (bands + 1 <= problem.basis_size()) {
      const BandSamples check = sample_bands(problem, grid, bands + 1, options.threads);
      if (!(check.band_min(bands + 1) > f.hi))
        throw BandTruncationError("coeff: band " + std::to_string(bands + 1) +
                                  " reaches the support of f; increase p_max");
    }
    out.p_cut = bands + 1;
  } else {
    out.p_cut = band_cutoff(problem, grid, f.hi + 1, options.threads);
    bands = out.p_cut - 1;
  }
  if (bands < 1) return out;
  const BandSamples samples = sample_bands(problem, grid, bands, options.threads);
  out.band1_min = samples.band_min(1);
  std::vector<double> s0(grid.size()), s1(grid.size());
  parallel_for(grid.size(), options.threads, [&](std::ptrdiff_t k) {
    double a = 0, b = 0;
    for (int p = 0; p < bands; ++p) {
      const auto [v0, v1] = per_lambda(samples.values(p, k));
      a += v0;
      b += v1;
    }
    s0[k] = grid.weights(k) * a;
    s1[k] = grid.weights(k) * b;
  });
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    out.sum0 += s0[k];
    out.sum1 += s1[k];
  }
  return out;
}

void check_coefficient_inputs(const CompactFunction& f, const Problem& problem, int potential_dim,
                              const CoefficientOptions& options) {
  f.validate();
  if (problem.dimension() != potential_dim) throw ValidationError("W and lattice dimensions differ");
  if (options.bz_resolution < 2) throw ResolutionError("coeff: bz_resolution must be >= 2");
}

}  // namespace

CoefficientResult compute_coefficients(const CompactFunction& f, const Problem& problem,
                                       const DecayPotential& potential, const CoefficientOptions& options) {
  check_coefficient_inputs(f, problem, potential.dimension(), options);
  const int n = potential.dimension();
  const double d = potential.delta(), s = n / d;
  const AngularConstants consts = angular_constants(potential, options.angular_points);
  const bool need_a1 = consts.B != 0;
  auto per_lambda = [&](double lambda) {
    const double v0 = shift_transform0(f, lambda, s, options.rel_tolerance);
    const double v1 = need_a1 ? shift_transform1(f, lambda, n, d, options.rel_tolerance) : 0.0;
    return std::pair<double, double>(v0, v1);
  };
  const double scale = phase_space_factor(n);
  const GridSums fine = band_grid_sums(f, problem, options.bz_resolution, options, per_lambda);
  const GridSums coarse = band_grid_sums(f, problem, options.bz_resolution / 2, options, per_lambda);

  CoefficientResult r;
  r.a0 = scale * consts.A * fine.sum0;
  r.a1 = scale * consts.B * fine.sum1;
  r.a0_error = std::abs(r.a0 - scale * consts.A * coarse.sum0);
  r.a1_error = std::abs(r.a1 - scale * consts.B * coarse.sum1);
  r.bz_resolution = options.bz_resolution;
  r.p_max = fine.p_cut;
  if (f.hi > fine.band1_min)
    r.truncation_radius = std::pow(potential.angular().w0_max() / (f.hi - fine.band1_min), 1 / d);
  return r;
}

CoefficientValue coefficient_a(int order, const CompactFunction& f, const Problem& problem,
                               const DecayPotential& potential, const CoefficientOptions& options) {
  if (order != 0 && order != 1) throw ValidationError("coefficient order must be 0 or 1");
  const CoefficientResult r = compute_coefficients(f, problem, potential, options);
  return order == 0 ? CoefficientValue{r.a0, r.a0_error} : CoefficientValue{r.a1, r.a1_error};
}

namespace {

// Radial integrals of the reference route along one direction:
// R0 = int [f(l + phi0) - f(l)] r^{n-1} dr and R1 = int f'(l + phi0) phi1 r^{n-1} dr.
std::pair<double, double> radial_reference(const CompactFunction& f, const ReferenceData& ref,
                                           const Eigen::VectorXd& theta, double lambda, const GaussRule& gauss,
                                           double rel_tolerance) {
  if (lambda >= f.hi) return {0, 0};
  const DecayPotential& W = ref.potential();
  const int n = W.dimension();
  const double d = W.delta();
  const double w0 = W.angular().value(0, theta);
  const bool with_w1 = W.angular().value(1, theta) != 0;
  const double fl = f(lambda);
  const double rc = ref.chi_radius();
  const double r_hi = std::pow(w0 / (f.hi - lambda), 1 / d);
  if (!(r_hi > rc)) throw NumericalError("reference route: support of f reaches the cutoff region");
  const auto opts = ts_options(rel_tolerance);
  const double small = kSmallShift * (f.hi - f.lo);

  auto x_of = [&](double r) { return Eigen::VectorXd(r * theta); };
  auto body0 = [&](double r) { return (f(lambda + ref.phi0(x_of(r))) - fl) * std::pow(r, n - 1); };
  auto body1 = [&](double r) {
    const Eigen::VectorXd x = x_of(r);
    return f.derivative(lambda + ref.phi0(x)) * ref.phi_j(1, x) * std::pow(r, n - 1);
  };

  // Cutoff region and the region where lambda + phi0 lies above supp f.
  double R0 = tanh_sinh(body0, 0, rc, opts).value + integrate(gauss, body0, rc, r_hi);
  double R1 = 0;
  if (with_w1) R1 = tanh_sinh(body1, 0, rc, opts).value + integrate(gauss, body1, rc, r_hi);

  if (lambda <= f.lo) {
    const double r_lo = lambda < f.lo ? std::pow(w0 / (f.lo - lambda), 1 / d) : std::numeric_limits<double>::infinity();
    if (std::isfinite(r_lo)) {
      R0 += tanh_sinh(body0, r_hi, r_lo, opts).value;
      if (with_w1) R1 += tanh_sinh(body1, r_hi, r_lo, opts).value;
      return {R0, R1};
    }
  }
  // Unbounded piece [r_hi, inf) mapped by r = r_hi / t; the shift is u = (hi - lambda) t^d.
  // Both mapped integrands vanish like a positive power of t as t -> 0 since delta > n.
  constexpr double kTinyT = 1e-100;
  auto mapped = [&](double, double t, double) {
    if (t < kTinyT) return 0.0;
    const double r = r_hi / t;
    const double u = (f.hi - lambda) * std::pow(t, d);
    const double diff = u < small ? u * f.derivative(lambda + 0.5 * u) : f(lambda + u) - fl;
    return diff * std::pow(r, n - 1) * r_hi / (t * t);
  };
  R0 += tanh_sinh(mapped, 0, 1, opts).value;
  if (with_w1) {
    auto mapped1 = [&](double, double t, double) {
      if (t < kTinyT) return 0.0;
      const double r = r_hi / t;
      return body1(r) * r_hi / (t * t);
    };
    R1 += tanh_sinh(mapped1, 0, 1, opts).value;
  }
  return {R0, R1};
}

}  // namespace

CoefficientResult reference_coefficients(const CompactFunction& f, const Problem& problem, const ReferenceData& ref,
                                         const CoefficientOptions& options) {
  const DecayPotential& W = ref.potential();
  check_coefficient_inputs(f, problem, W.dimension(), options);
  const int n = W.dimension();
  const auto nodes = angular_nodes(n, options.angular_points);
  const GaussRule gauss = gauss_legendre(std::max(2, options.radial_points));
  auto per_lambda = [&](double lambda) {
    double v0 = 0, v1 = 0;
    for (const auto& [theta, weight] : nodes) {
      const auto [r0, r1] = radial_reference(f, ref, theta, lambda, gauss, options.rel_tolerance);
      v0 += weight * r0;
      v1 += weight * r1;
    }
    return std::pair<double, double>(v0, v1);
  };
  const double scale = phase_space_factor(n);
  const GridSums fine = band_grid_sums(f, problem, options.bz_resolution, options, per_lambda);
  const GridSums coarse = band_grid_sums(f, problem, options.bz_resolution / 2, options, per_lambda);
  CoefficientResult r;
  r.a0 = scale * fine.sum0;
  r.a1 = scale * fine.sum1;
  r.a0_error = std::abs(r.a0 - scale * coarse.sum0);
  r.a1_error = std::abs(r.a1 - scale * coarse.sum1);
  r.bz_resolution = options.bz_resolution;
  r.p_max = fine.p_cut;
  if (f.hi > fine.band1_min)
    r.truncation_radius = std::pow(W.angular().w0_max() / (f.hi - fine.band1_min), 1 / W.delta());
  return r;
}

namespace {

// int_0^U g(u) du over the DOS table segments in t = lambda - u; the first segments
// (near the endpoint singularity at u = 0) use tanh-sinh, the rest Gauss-Legendre.
template <typename G>
double table_integral(const DosTable& dos, double lambda, G&& g, const GaussRule& gauss) {
  const double e0 = dos.energies.front(), de = dos.spacing();
  const double U = lambda - e0;
  if (U <= 0) return 0;
  TanhSinhOptions opts = ts_options(1e-12);
  opts.abs_tolerance = 1e-18;
  // Largest node strictly below lambda.
  long m = static_cast<long>(std::ceil((lambda - e0) / de)) - 1;
  m = std::clamp<long>(m, 0, static_cast<long>(dos.energies.size()) - 1);
  double total = 0;
  double u_prev = 0;
  int segment = 0;
  for (long i = m; i >= 0; --i, ++segment) {
    const double u_next = lambda - dos.energies[static_cast<std::size_t>(i)];
    if (!(u_next > u_prev)) continue;
    if (segment < 8) {
      const double base = u_prev;
      total += tanh_sinh([&](double, double da, double) { return g(base + da); }, u_prev, u_next, opts).value;
    } else {
      total += integrate(gauss, g, u_prev, u_next);
    }
    u_prev = u_next;
  }
  return total;
}

struct GammaContext {
  const DecayPotential& potential;
  const DosTable& dos;
  AngularConstants consts;
  double eta;
  GaussRule gauss;
};

double J_value(const GammaContext& c, double lambda) {
  const int n = c.potential.dimension();
  const double s = n / c.potential.delta();
  const double rho_l = c.dos.smooth_ids(lambda);
  const double small = kSmallShift * c.dos.spacing();
  auto g = [&](double u) {
    if (u < small) return c.dos.smooth_density(lambda - 0.5 * u) * std::pow(u, -s);
    return (rho_l - c.dos.smooth_ids(lambda - u)) * std::pow(u, -s - 1);
  };
  const double U = lambda - c.dos.energies.front();
  if (U <= 0) return 0;
  return table_integral(c.dos, lambda, g, c.gauss) + rho_l * std::pow(U, -s) / s;
}

double K_prime(const GammaContext& c, double lambda) {
  const int n = c.potential.dimension();
  const double alpha = (1.0 - n) / c.potential.delta();
  auto g = [&](double u) { return c.dos.smooth_density(lambda - u) * std::pow(u, alpha); };
  return table_integral(c.dos, lambda, g, c.gauss);
}

double gamma_at(const GammaContext& c, int order, double lambda) {
  const double eta = c.eta;
  if (order == 0) return c.consts.A * (J_value(c, lambda + eta) - J_value(c, lambda - eta)) / (2 * eta);
  if (c.consts.B == 0) return 0;
  if (c.potential.dimension() == 1) return c.consts.B * c.dos.smooth_density(lambda);
  return c.consts.B * (K_prime(c, lambda + eta) - K_prime(c, lambda - eta)) / (2 * eta);
}

GammaContext make_context(const DecayPotential& potential, const DosTable& dos, const GammaOptions& options) {
  if (!dos.starts_below_spectrum())
    throw ValidationError("gamma: the DOS table must start below the spectrum (energy_min too high)");
  const double eta = options.fd_step > 0 ? options.fd_step : dos.kernel_width;
  return {potential, dos, angular_constants(potential, options.angular_points), eta, gauss_legendre(8)};
}

void check_gamma_energy(const GammaContext& c, const EnergyWindow& window, double lambda) {
  if (!window.contains(lambda))
    throw OutOfWindowError("gamma: lambda = " + std::to_string(lambda) + " lies outside the window [" +
                           std::to_string(window.a) + ", " + std::to_string(window.b) + "]");
  if (lambda + c.eta > c.dos.energies.back())
    throw OutOfWindowError("gamma: the DOS table must extend past lambda + fd_step");
}

}  // namespace

double gamma(int order, double lambda, const DecayPotential& potential, const DosTable& dos,
             const EnergyWindow& window, const GammaOptions& options) {
  if (order != 0 && order != 1) throw ValidationError("gamma order must be 0 or 1");
  const GammaContext c = make_context(potential, dos, options);
  check_gamma_energy(c, window, lambda);
  return gamma_at(c, order, lambda);
}

GammaTable gamma_table(const std::vector<double>& energies, const DecayPotential& potential, const DosTable& dos,
                       const EnergyWindow& window, const GammaOptions& options) {
  const GammaContext c = make_context(potential, dos, options);
  GammaTable table;
  table.energies = energies;
  table.gamma0.resize(energies.size());
  table.gamma1.resize(energies.size());
  for (double e : energies) check_gamma_energy(c, window, e);
  parallel_for(static_cast<std::ptrdiff_t>(energies.size()), 0, [&](std::ptrdiff_t i) {
    table.gamma0[i] = gamma_at(c, 0, energies[i]);
    table.gamma1[i] = gamma_at(c, 1, energies[i]);
  });
  return table;
}

DualityReport duality_check(const CompactFunction& f, const EnergyWindow& window, const Problem& problem,
                            const DecayPotential& potential, const DosTable& dos,
                            const CoefficientOptions& coeff_options, const GammaOptions& gamma_options,
                            int lambda_panels) {
  f.validate();
  if (f.lo < window.a || f.hi > window.b) throw OutOfWindowError("duality_check: supp f must lie in the window");
  DualityReport report;
  const CoefficientResult coeffs = compute_coefficients(f, problem, potential, coeff_options);
  report.a0 = coeffs.a0;
  report.a1 = coeffs.a1;
  if (f.hi > f.lo) {
    const GammaContext c = make_context(potential, dos, gamma_options);
    check_gamma_energy(c, window, f.hi);
    const GaussRule gauss = gauss_legendre(10);
    const int panels = std::max(1, lambda_panels);
    const double width = (f.hi - f.lo) / panels;
    std::vector<double> nodes, weights;
    for (int p = 0; p < panels; ++p) {
      const double a = f.lo + p * width;
      for (std::size_t i = 0; i < gauss.nodes.size(); ++i) {
        nodes.push_back(a + 0.5 * width * (gauss.nodes[i] + 1));
        weights.push_back(0.5 * width * gauss.weights[i]);
      }
    }
    std::vector<double> g0(nodes.size()), g1(nodes.size());
    parallel_for(static_cast<std::ptrdiff_t>(nodes.size()), coeff_options.threads, [&](std::ptrdiff_t i) {
      g0[i] = gamma_at(c, 0, nodes[i]);
      g1[i] = gamma_at(c, 1, nodes[i]);
    });
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      report.pairing0 += weights[i] * g0[i] * f(nodes[i]);
      report.pairing1 += weights[i] * g1[i] * f(nodes[i]);
    }
  }
  report.residual0 = std::abs(report.a0 + report.pairing0);
  report.residual1 = std::abs(report.a1 + report.pairing1);
  return report;
}

DosTable gamma_dos_table(const Problem& problem, double hi, double sigma, int bz_resolution, int threads) {
  if (!(sigma > 0)) throw ValidationError("gamma DOS table: kernel width must be positive");
  const Grid grid = bz_grid(problem.dual(), bz_resolution);
  const double top = hi + 4 * sigma;
  const int p = band_cutoff(problem, grid, top + 10 * sigma, threads);
  const BandSamples samples = sample_bands(problem, grid, p, threads);
  const double de = sigma / 4;
  const double e0 = std::min(samples.band_min(1), hi) - 12 * sigma;
  const int points = static_cast<int>(std::ceil((top - e0) / de)) + 1;
  std::vector<double> energies(points);
  for (int i = 0; i < points; ++i) energies[i] = e0 + i * de;
  return dos_density(samples, energies, sigma);
}

}  // namespace bandshift
