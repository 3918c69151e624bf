#include "bandshift/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "bandshift/errors.hpp"
#include "bandshift/parallel.hpp"

namespace bandshift {

std::string to_string(TraceMethod method) { return method == TraceMethod::dense ? "dense" : "chebyshev"; }

BoxDiscretization box_rule(double mu, double delta, double cell_length, const OracleOptions& options) {
  if (options.modes_per_cell < 2) throw ValidationError("oracle.modes_per_cell must be >= 2");
  if (!(options.c_tail > 0)) throw ValidationError("oracle.c_tail must be positive");
  BoxDiscretization box;
  box.modes_per_cell = options.modes_per_cell;
  box.cell_length = cell_length;
  const double required = mu > 0 ? options.c_tail * std::pow(mu, 1 / delta) : 0;
  box.cells = std::max({1, options.cells, static_cast<int>(std::ceil(required / cell_length - 1e-12))});
  box.h_param = mu > 0 ? std::pow(mu, -1 / delta) : 0;
  return box;
}

void check_tail_rule(const BoxDiscretization& box, double mu, double delta, double c_tail) {
  if (mu <= 0) return;
  const double required = c_tail * std::pow(mu, 1 / delta);
  if (box.length() < required * (1 - 1e-12))
    throw BoxTooSmallError("box length " + std::to_string(box.length()) + " is below c_tail mu^{1/delta} = " +
                           std::to_string(required));
}

double tail_bound(const BoxDiscretization& box, double mu, const DecayPotential& potential, double max_abs_fprime) {
  const double d = potential.delta();
  const double R = 0.5 * box.length();
  return mu * potential.angular().w0_max() * std::pow(R, 1 - d) / (d - 1) * max_abs_fprime;
}

template <typename Scalar>
MatrixX<Scalar> box_hamiltonian(const BoxDiscretization& box, const BoxPotential& potential) {
  const int N = box.size();
  const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
  const Scalar length = Scalar(box.cells) * Scalar(box.cell_length);
  std::vector<Scalar> cosines(N);
  for (int m = 0; m < N; ++m) cosines[m] = std::cos(two_pi * Scalar(m) / Scalar(N));
  // Circulant kinetic stencil c[d] = (1/N) sum_j q_j^2 cos(2 pi j d / N), j in (-N/2, N/2].
  std::vector<Scalar> stencil(N, Scalar(0));
  for (int d = 0; d < N; ++d) {
    Scalar sum = 0;
    for (int j = -((N - 1) / 2); j <= N / 2; ++j) {
      const Scalar q = two_pi * Scalar(j) / length;
      const long idx = ((static_cast<long>(j) * d) % N + N) % N;
      sum += q * q * cosines[static_cast<std::size_t>(idx)];
    }
    stencil[d] = sum / Scalar(N);
  }
  MatrixX<Scalar> h(N, N);
  for (int i = 0; i < N; ++i)
    for (int k = 0; k < N; ++k) h(i, k) = stencil[static_cast<std::size_t>(std::abs(i - k))];
  for (int i = 0; i < N; ++i) h(i, i) += Scalar(potential(box.node(i)));
  return h;
}

template MatrixX<double> box_hamiltonian<double>(const BoxDiscretization&, const BoxPotential&);
template MatrixX<long double> box_hamiltonian<long double>(const BoxDiscretization&, const BoxPotential&);

namespace {

template <typename Scalar>
Eigen::VectorXd spectrum_of(const BoxDiscretization& box, const BoxPotential& potential) {
  const MatrixX<Scalar> h = box_hamiltonian<Scalar>(box, potential);
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(h, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("box eigensolver did not converge");
  return solver.eigenvalues().template cast<double>();
}

double max_abs_derivative(const CompactFunction& f) {
  double best = 0;
  for (int i = 0; i <= 4000; ++i) best = std::max(best, std::abs(f.derivative(f.lo + (f.hi - f.lo) * i / 4000.0)));
  return best;
}

double sum_f(const CompactFunction& f, const Eigen::VectorXd& e, int* in_support) {
  double s = 0;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    if (e(i) > f.lo && e(i) < f.hi) {
      s += f(e(i));
      ++*in_support;
    }
  }
  return s;
}

}  // namespace

Eigen::VectorXd box_spectrum(const BoxDiscretization& box, const BoxPotential& potential, bool extended) {
  return extended ? spectrum_of<long double>(box, potential) : spectrum_of<double>(box, potential);
}

BoxPotential periodic_potential(const Problem& problem) {
  if (problem.dimension() != 1) throw ValidationError("the box oracle is one-dimensional");
  const FourierPotential<double> v = problem.potential();
  const DualLattice<double> dual = problem.dual();
  return [v, dual](double x) { return v.value(Eigen::VectorXd::Constant(1, x), dual); };
}

TraceEstimate chebyshev_trace(const BoxDiscretization& box, const CompactFunction& f, const BoxPotential& potential,
                              const OracleOptions& options) {
  f.validate();
  const Eigen::MatrixXd h = box_hamiltonian<double>(box, potential);
  const Eigen::Index N = h.rows();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Eigen::Index i = 0; i < N; ++i) {
    const double radius = h.row(i).cwiseAbs().sum() - std::abs(h(i, i));
    lo = std::min(lo, h(i, i) - radius);
    hi = std::max(hi, h(i, i) + radius);
  }
  const double pad = 1e-2 * (hi - lo);
  lo -= pad;
  hi += pad;
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo))
    throw SpectralBoundError("Chebyshev interval does not enclose the spectrum");
  if (f.lo < lo || f.hi > hi) {
    // f vanishes on the spectrum only if its support misses [lo, hi] entirely.
    if (f.hi <= lo || f.lo >= hi) return {0, TraceMethod::chebyshev, 0, 0, static_cast<int>(N), box.cells};
  }
  const double center = 0.5 * (hi + lo), radius = 0.5 * (hi - lo);
  const double half_width = 0.5 * (f.hi - f.lo);
  const int degree = std::max(8, static_cast<int>(std::ceil(options.cheb_degree_factor * (hi - lo) / half_width)));

  // Chebyshev coefficients by Gauss-Chebyshev quadrature; only nodes inside supp f contribute.
  const int Q = 2 * degree + 2;
  std::vector<double> coeff(degree + 1, 0.0);
  for (int j = 0; j < Q; ++j) {
    const double theta = std::numbers::pi * (j + 0.5) / Q;
    const double x = center + radius * std::cos(theta);
    if (!(x > f.lo && x < f.hi)) continue;
    const double fx = f(x);
    for (int k = 0; k <= degree; ++k) coeff[k] += fx * std::cos(k * theta);
  }
  for (int k = 0; k <= degree; ++k) coeff[k] *= 2.0 / Q;
  coeff[0] *= 0.5;

  const Eigen::MatrixXd scaled = (h - center * Eigen::MatrixXd::Identity(N, N)) / radius;
  const int half = degree / 2 + 1;
  const int block = 32;
  Eigen::Index columns = N;
  Eigen::MatrixXd probes;
  if (options.stochastic) {
    if (options.probes < 1) throw ValidationError("oracle.probes must be positive");
    std::mt19937_64 rng(options.seed);
    std::bernoulli_distribution coin(0.5);
    probes.resize(N, options.probes);
    for (Eigen::Index j = 0; j < probes.cols(); ++j)
      for (Eigen::Index i = 0; i < N; ++i) probes(i, j) = coin(rng) ? 1.0 : -1.0;
    columns = probes.cols();
  }
  const Eigen::Index blocks = (columns + block - 1) / block;
  // Per-block moments of every column, reduced in block order for determinism.
  std::vector<std::vector<double>> block_moments(blocks);
  std::vector<double> column_traces(options.stochastic ? columns : 0);
  parallel_for(blocks, options.threads, [&](std::ptrdiff_t b) {
    const Eigen::Index start = b * block, width = std::min<Eigen::Index>(block, columns - start);
    Eigen::MatrixXd v0 = options.stochastic ? Eigen::MatrixXd(probes.middleCols(start, width))
                                            : Eigen::MatrixXd(Eigen::MatrixXd::Identity(N, N).middleCols(start, width));
    Eigen::MatrixXd v1 = scaled * v0;
    const Eigen::VectorXd norm0 = v0.colwise().squaredNorm().transpose();
    const Eigen::VectorXd t1 = (v0.cwiseProduct(v1)).colwise().sum().transpose();
    std::vector<double> mom(static_cast<std::size_t>(2 * half + 2), 0.0);
    Eigen::MatrixXd per_column;
    if (options.stochastic) per_column = Eigen::MatrixXd::Zero(width, mom.size());
    Eigen::MatrixXd prev = v0, cur = v1;
    auto add = [&](std::size_t k, const Eigen::VectorXd& values) {
      if (k >= mom.size()) return;
      mom[k] += values.sum();
      if (options.stochastic) per_column.col(static_cast<Eigen::Index>(k)) += values;
    };
    add(0, norm0);
    add(1, t1);
    // T_k v for k = 1..half: T_{2k} = 2 T_k^2 - 1, T_{2k+1} = 2 T_{k+1} T_k - T_1.
    for (int k = 1; k <= half; ++k) {
      Eigen::MatrixXd next = 2 * (scaled * cur) - prev;
      add(static_cast<std::size_t>(2 * k), Eigen::VectorXd(2 * cur.colwise().squaredNorm().transpose() - norm0));
      add(static_cast<std::size_t>(2 * k + 1),
          Eigen::VectorXd(2 * next.cwiseProduct(cur).colwise().sum().transpose() - t1));
      prev = std::move(cur);
      cur = std::move(next);
    }
    block_moments[b] = std::move(mom);
    if (options.stochastic)
      for (Eigen::Index c = 0; c < width; ++c) {
        double t = 0;
        for (int k = 0; k <= degree; ++k) t += coeff[k] * per_column(c, k);
        column_traces[static_cast<std::size_t>(start + c)] = t;
      }
  });
  std::vector<double> moments(static_cast<std::size_t>(2 * half + 2), 0.0);
  for (const auto& mom : block_moments)
    for (std::size_t k = 0; k < moments.size(); ++k) moments[k] += mom[k];
  double value = 0;
  for (int k = 0; k <= degree; ++k) value += coeff[k] * moments[k];

  TraceEstimate est;
  est.method = TraceMethod::chebyshev;
  est.basis_size = static_cast<int>(N);
  est.cells = box.cells;
  // Truncation: size of the trailing coefficients times the basis size.
  double tail = 0;
  for (int k = degree - degree / 8; k <= degree; ++k) tail = std::max(tail, std::abs(coeff[k]));
  est.error_estimate = tail * static_cast<double>(N);
  if (options.stochastic) {
    const double P = static_cast<double>(columns);
    value /= P;
    double mean = 0, var = 0;
    for (double t : column_traces) mean += t;
    mean /= P;
    for (double t : column_traces) var += (t - mean) * (t - mean);
    var /= std::max(1.0, P - 1);
    est.error_estimate += std::sqrt(var / P);
  }
  est.value = value;
  return est;
}

TraceEstimate trace_difference(const BoxDiscretization& box, const CompactFunction& f, const BoxPotential& a,
                               const BoxPotential& b, const OracleOptions& options) {
  f.validate();
  TraceEstimate est;
  est.basis_size = box.size();
  est.cells = box.cells;
  if (box.size() <= options.dense_threshold) {
    const Eigen::VectorXd ea = box_spectrum(box, a, options.extended_precision);
    const Eigen::VectorXd eb = box_spectrum(box, b, options.extended_precision);
    int count = 0;
    est.value = sum_f(f, ea, &count) - sum_f(f, eb, &count);
    const double norm = std::max({std::abs(ea(0)), std::abs(ea(ea.size() - 1)), std::abs(eb(0)),
                                  std::abs(eb(eb.size() - 1))});
    const double eps = options.extended_precision ? std::numeric_limits<long double>::epsilon()
                                                  : std::numeric_limits<double>::epsilon();
    est.error_estimate = 10 * eps * norm * max_abs_derivative(f) * std::sqrt(static_cast<double>(std::max(count, 1))) +
                         std::numeric_limits<double>::epsilon() * count;
    est.method = TraceMethod::dense;
    return est;
  }
  const TraceEstimate ta = chebyshev_trace(box, f, a, options);
  const TraceEstimate tb = chebyshev_trace(box, f, b, options);
  est.value = ta.value - tb.value;
  est.error_estimate = ta.error_estimate + tb.error_estimate;
  est.method = TraceMethod::chebyshev;
  return est;
}

namespace {

void require_one_dimensional(const Problem& problem, const DecayPotential& potential) {
  if (problem.dimension() != 1 || potential.dimension() != 1)
    throw ValidationError("the box oracle is one-dimensional");
}

BoxPotential perturbed(const BoxPotential& base, const DecayPotential& potential, double mu) {
  return [base, potential, mu](double x) {
    return base(x) + mu * potential(Eigen::VectorXd::Constant(1, x));
  };
}

BoxPotential reference_operator(const BoxPotential& base, const ReferenceData& ref) {
  return [base, ref](double x) { return base(x) + ref.q_potential(Eigen::VectorXd::Constant(1, x)); };
}

ReferenceData reference_for(const Problem& problem, const CompactFunction& f, double mu,
                            const DecayPotential& potential, const QSetup& q) {
  const double M = q.M > 0 ? q.M : choose_M(f.lo, f.hi, problem.potential().sup_bound());
  return build_reference(potential, M, std::pow(mu, -1 / potential.delta()), q.reference);
}

}  // namespace

TraceEstimate trace_f_diff(const Problem& problem, const BoxDiscretization& box, const CompactFunction& f, double mu,
                           const DecayPotential& potential, Operator which, const OracleOptions& options,
                           const QSetup& q) {
  require_one_dimensional(problem, potential);
  if (mu < 0) throw ValidationError("mu must be non-negative");
  TraceEstimate est;
  est.mu = mu;
  est.basis_size = box.size();
  est.cells = box.cells;
  est.method = box.size() <= options.dense_threshold ? TraceMethod::dense : TraceMethod::chebyshev;
  if (mu == 0) return est;
  check_tail_rule(box, mu, potential.delta(), options.c_tail);
  const BoxPotential base = periodic_potential(problem);
  BoxPotential pert;
  if (which == Operator::P_mu)
    pert = perturbed(base, potential, mu);
  else
    pert = reference_operator(base, reference_for(problem, f, mu, potential, q));
  est = trace_difference(box, f, pert, base, options);
  est.mu = mu;
  return est;
}

namespace {

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

QReductionReport q_reduction_check(const Problem& problem, const CompactFunction& f, const std::vector<double>& mus,
                                   const DecayPotential& potential, const OracleOptions& options, const QSetup& q) {
  require_one_dimensional(problem, potential);
  if (mus.size() < 2) throw InsufficientDataError("q_reduction_check needs at least two mu values");
  QReductionReport report;
  const BoxPotential base = periodic_potential(problem);
  const double cell = problem.lattice().cell_volume();
  for (double mu : mus) {
    if (!(mu > 0)) throw ValidationError("mu values must be positive");
    const BoxDiscretization box = box_rule(mu, potential.delta(), cell, options);
    const ReferenceData ref = reference_for(problem, f, mu, potential, q);
    const TraceEstimate t = trace_difference(box, f, perturbed(base, potential, mu), reference_operator(base, ref),
                                             options);
    report.rows.push_back({mu, std::abs(t.value), t.error_estimate, box.cells});
  }
  std::vector<double> lx, ly;
  for (const auto& row : report.rows) {
    lx.push_back(std::log10(row.mu));
    ly.push_back(std::log10(std::max(row.difference, std::numeric_limits<double>::min())));
  }
  report.slope = ls_slope(lx, ly);
  report.strictly_decreasing = true;
  for (std::size_t i = 1; i < lx.size(); ++i) {
    report.local_slopes.push_back((ly[i] - ly[i - 1]) / (lx[i] - lx[i - 1]));
    if (!(report.rows[i].difference < report.rows[i - 1].difference)) report.strictly_decreasing = false;
  }
  return report;
}

double smoothed_xi_prime(const Problem& problem, const BoxDiscretization& box, double lambda, double epsilon,
                         double mu, const DecayPotential& potential, const OracleOptions& options) {
  require_one_dimensional(problem, potential);
  if (!(epsilon > 0)) throw ValidationError("epsilon must be positive");
  if (mu == 0) return 0;
  check_tail_rule(box, mu, potential.delta(), options.c_tail);
  const BoxPotential base = periodic_potential(problem);
  const Eigen::VectorXd e0 = box_spectrum(box, base, options.extended_precision);
  int near = 0;
  for (Eigen::Index i = 0; i < e0.size(); ++i) near += std::abs(e0(i) - lambda) <= epsilon;
  const double spacing = near > 0 ? 2 * epsilon / near : std::numeric_limits<double>::infinity();
  if (epsilon < 2 * spacing)
    throw ResolutionError("epsilon = " + std::to_string(epsilon) + " is below twice the mean level spacing " +
                          std::to_string(spacing) + "; enlarge the box or epsilon");
  const Eigen::VectorXd e1 = box_spectrum(box, perturbed(base, potential, mu), options.extended_precision);
  double s0 = 0, s1 = 0;
  for (Eigen::Index i = 0; i < e0.size(); ++i) s0 += gaussian(lambda - e0(i), epsilon);
  for (Eigen::Index i = 0; i < e1.size(); ++i) s1 += gaussian(lambda - e1(i), epsilon);
  return s0 - s1;
}

SweepFit fit_sweep(const std::vector<double>& mus, const std::vector<double>& traces, int n, double delta) {
  if (mus.size() != traces.size()) throw ValidationError("fit_sweep: mu and trace lists differ in length");
  if (mus.size() < 3) throw InsufficientDataError("mu sweep needs at least three mu values");
  SweepFit fit;
  fit.mus = mus;
  fit.traces = traces;
  const double s = n / delta;
  std::vector<double> x, y, lx, ly;
  for (std::size_t i = 0; i < mus.size(); ++i) {
    if (!(mus[i] > 0)) throw ValidationError("mu values must be positive");
    x.push_back(std::pow(mus[i], -1 / delta));
    y.push_back(traces[i] / std::pow(mus[i], s));
    lx.push_back(std::log(mus[i]));
    ly.push_back(std::log(std::abs(traces[i])));
  }
  fit.c1 = ls_slope(x, y);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  fit.c0 = my - fit.c1 * mx;
  fit.c0_one_term = my;
  for (std::size_t i = 0; i < x.size(); ++i) {
    fit.residual_two_term = std::max(fit.residual_two_term, std::abs(y[i] - fit.c0 - fit.c1 * x[i]));
    fit.residual_one_term = std::max(fit.residual_one_term, std::abs(y[i] - my));
  }
  fit.slope = ls_slope(lx, ly);
  return fit;
}

SweepFit mu_sweep_fit(const Problem& problem, const CompactFunction& f, const std::vector<double>& mus,
                      const DecayPotential& potential, const OracleOptions& options,
                      std::vector<TraceEstimate>* traces) {
  require_one_dimensional(problem, potential);
  if (mus.size() < 3) throw InsufficientDataError("mu sweep needs at least three mu values");
  const double cell = problem.lattice().cell_volume();
  std::vector<double> values;
  for (double mu : mus) {
    const BoxDiscretization box = box_rule(mu, potential.delta(), cell, options);
    const TraceEstimate t = trace_f_diff(problem, box, f, mu, potential, Operator::P_mu, options);
    values.push_back(t.value);
    if (traces) traces->push_back(t);
  }
  return fit_sweep(mus, values, potential.dimension(), potential.delta());
}

}  // namespace bandshift
