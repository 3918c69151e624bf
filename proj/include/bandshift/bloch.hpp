#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bandshift/errors.hpp"
#include "bandshift/lattice.hpp"

namespace bandshift {

template <typename Scalar>
using ComplexMatrixX = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

using MillerIndex = std::vector<int>;

/// Periodic potential given by its Fourier amplitudes on the dual lattice,
/// V(y) = sum_m V(m) exp(i <m_1 e*_1 + ... + m_n e*_n, y>).
template <typename Scalar = double>
class FourierPotential {
 public:
  using Complex = std::complex<Scalar>;

  FourierPotential(int dimension, std::map<MillerIndex, Complex> coefficients, Scalar cutoff_norm)
      : dimension_(dimension), coefficients_(std::move(coefficients)), cutoff_norm_(cutoff_norm) {
    if (dimension < 1) throw ValidationError("potential dimension must be positive");
    if (!(cutoff_norm > 0)) throw ValidationError("potential cutoff_norm must be positive");
    Scalar scale = 0;
    for (const auto& [m, v] : coefficients_) {
      if (static_cast<int>(m.size()) != dimension)
        throw ValidationError("potential index has the wrong dimension");
      scale = std::max(scale, std::abs(v));
    }
    for (const auto& [m, v] : coefficients_) {
      MillerIndex neg(m);
      for (int& c : neg) c = -c;
      const auto it = coefficients_.find(neg);
      const Complex partner = it == coefficients_.end() ? Complex(0) : it->second;
      if (std::abs(partner - std::conj(v)) > Scalar(1e-14) * std::max(Scalar(1), scale))
        throw ValidationError("potential is not real-valued: V(-m) != conj(V(m))");
    }
  }

  /// Zero potential.
  explicit FourierPotential(int dimension) : FourierPotential(dimension, {}, Scalar(1)) {}

  int dimension() const { return dimension_; }
  Scalar cutoff_norm() const { return cutoff_norm_; }
  const std::map<MillerIndex, Complex>& coefficients() const { return coefficients_; }

  Complex coefficient(const MillerIndex& m) const {
    const auto it = coefficients_.find(m);
    return it == coefficients_.end() ? Complex(0) : it->second;
  }

  /// Upper bound for sup |V|.
  Scalar sup_bound() const {
    Scalar s = 0;
    for (const auto& entry : coefficients_) s += std::abs(entry.second);
    return s;
  }

  template <typename Derived>
  Scalar value(const Eigen::MatrixBase<Derived>& y, const DualLattice<Scalar>& dual) const {
    Scalar v = 0;
    VectorX<Scalar> m(dimension_);
    for (const auto& [index, amp] : coefficients_) {
      for (int i = 0; i < dimension_; ++i) m(i) = Scalar(index[i]);
      const Scalar phase = (dual.basis() * m).dot(y);
      v += amp.real() * std::cos(phase) - amp.imag() * std::sin(phase);
    }
    return v;
  }

 private:
  int dimension_;
  std::map<MillerIndex, Complex> coefficients_;
  Scalar cutoff_norm_;
};

/// Sorted band values at one quasi-momentum.
template <typename Scalar = double>
struct BandSet {
  VectorX<Scalar> k;
  VectorX<Scalar> values;
  std::optional<ComplexMatrixX<Scalar>> vectors;  // columns are plane-wave coefficients
};

template <typename Scalar>
Scalar degeneracy_tolerance(Scalar lambda) {
  return Scalar(1e-8) * (1 + std::abs(lambda));
}

/// Floquet operator P(k) = (D_y + k)^2 + V(y) truncated to plane waves |G| <= g_max.
template <typename Scalar = double>
class BlochProblem {
 public:
  using Complex = std::complex<Scalar>;

  BlochProblem(Lattice<Scalar> lattice, FourierPotential<Scalar> potential, Scalar g_max)
      : lattice_(std::move(lattice)),
        dual_(dual_basis(lattice_)),
        potential_(std::move(potential)),
        g_max_(g_max) {
    const int n = lattice_.dimension();
    if (potential_.dimension() != n) throw ValidationError("potential and lattice dimensions differ");
    if (!(g_max_ > 0)) throw EmptyBasisError("g_max must be positive");
    VectorX<Scalar> m(n);
    for (const auto& entry : potential_.coefficients()) {
      for (int i = 0; i < n; ++i) m(i) = Scalar(entry.first[i]);
      if ((dual_.basis() * m).norm() > potential_.cutoff_norm() * (1 + Scalar(1e-12)))
        throw ValidationError("potential has a coefficient beyond its cutoff_norm");
    }
    enumerate_basis();
    if (indices_.empty()) throw EmptyBasisError("plane-wave basis is empty; increase g_max");
    const Eigen::Index size = basis_size();
    potential_matrix_.resize(size, size);
    MillerIndex diff(n);
    for (Eigen::Index i = 0; i < size; ++i)
      for (Eigen::Index j = 0; j < size; ++j) {
        for (int d = 0; d < n; ++d) diff[d] = indices_[i][d] - indices_[j][d];
        potential_matrix_(i, j) = potential_.coefficient(diff);
      }
  }

  const Lattice<Scalar>& lattice() const { return lattice_; }
  const DualLattice<Scalar>& dual() const { return dual_; }
  const FourierPotential<Scalar>& potential() const { return potential_; }
  Scalar g_max() const { return g_max_; }
  int dimension() const { return lattice_.dimension(); }
  Eigen::Index basis_size() const { return static_cast<Eigen::Index>(indices_.size()); }
  const std::vector<MillerIndex>& basis_indices() const { return indices_; }
  /// Cartesian plane-wave vectors, one per column.
  const MatrixX<Scalar>& basis_vectors() const { return vectors_; }

  /// Hermitian matrix of P(k): |k+G|^2 delta_{GG'} + V(G - G').
  template <typename Derived>
  ComplexMatrixX<Scalar> assemble(const Eigen::MatrixBase<Derived>& k) const {
    ComplexMatrixX<Scalar> h = potential_matrix_;
    for (Eigen::Index i = 0; i < basis_size(); ++i) h(i, i) += (vectors_.col(i) + k).squaredNorm();
    return h;
  }

 private:
  void enumerate_basis() {
    const int n = dimension();
    // |m_i| <= |row_i(B*^{-1})| |G| bounds the search box.
    const MatrixX<Scalar> inv = dual_.basis().inverse();
    std::vector<int> bound(n);
    for (int i = 0; i < n; ++i) bound[i] = static_cast<int>(std::ceil(inv.row(i).norm() * g_max_)) + 1;
    MillerIndex m(n);
    for (int i = 0; i < n; ++i) m[i] = -bound[i];
    VectorX<Scalar> mv(n);
    struct Entry {
      Scalar norm2;
      MillerIndex index;
    };
    std::vector<Entry> entries;
    while (true) {
      for (int i = 0; i < n; ++i) mv(i) = Scalar(m[i]);
      const Scalar norm2 = (dual_.basis() * mv).squaredNorm();
      if (norm2 <= g_max_ * g_max_ * (1 + Scalar(1e-12))) entries.push_back({norm2, m});
      int axis = 0;
      while (axis < n && ++m[axis] > bound[axis]) {
        m[axis] = -bound[axis];
        ++axis;
      }
      if (axis == n) break;
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      if (a.norm2 != b.norm2) return a.norm2 < b.norm2;
      return a.index < b.index;
    });
    vectors_.resize(n, static_cast<Eigen::Index>(entries.size()));
    for (std::size_t e = 0; e < entries.size(); ++e) {
      indices_.push_back(entries[e].index);
      for (int i = 0; i < n; ++i) mv(i) = Scalar(entries[e].index[i]);
      vectors_.col(static_cast<Eigen::Index>(e)) = dual_.basis() * mv;
    }
  }

  Lattice<Scalar> lattice_;
  DualLattice<Scalar> dual_;
  FourierPotential<Scalar> potential_;
  Scalar g_max_;
  std::vector<MillerIndex> indices_;
  MatrixX<Scalar> vectors_;
  ComplexMatrixX<Scalar> potential_matrix_;
};

template <typename Scalar, typename Derived>
ComplexMatrixX<Scalar> assemble_pk(const BlochProblem<Scalar>& problem, const Eigen::MatrixBase<Derived>& k) {
  return problem.assemble(k);
}

namespace detail {

template <typename Derived>
std::string format_k(const Eigen::MatrixBase<Derived>& k) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < k.size(); ++i) s += (i ? ", " : "") + std::to_string(k(i));
  return s + ")";
}

}  // namespace detail

/// Lowest `p_max` eigenvalues of P(k), repeated according to multiplicity.
/// Eigenvector phases are fixed so the largest-magnitude coefficient is real positive.
template <typename Scalar, typename Derived>
BandSet<Scalar> solve_bands(const BlochProblem<Scalar>& problem, const Eigen::MatrixBase<Derived>& k, int p_max,
                            bool with_vectors = false) {
  if (p_max < 1 || p_max > problem.basis_size())
    throw ValidationError("solve_bands: p_max must lie in [1, basis size]");
  const ComplexMatrixX<Scalar> h = problem.assemble(k);
  Eigen::SelfAdjointEigenSolver<ComplexMatrixX<Scalar>> solver(
      h, with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw NumericalError("eigensolver did not converge at k = " + detail::format_k(k));
  BandSet<Scalar> bands;
  bands.k = k;
  bands.values = solver.eigenvalues().head(p_max);
  if (with_vectors) {
    ComplexMatrixX<Scalar> v = solver.eigenvectors().leftCols(p_max);
    for (int p = 0; p < p_max; ++p) {
      Eigen::Index imax = 0;
      v.col(p).cwiseAbs().maxCoeff(&imax);
      const std::complex<Scalar> c = v(imax, p);
      v.col(p) *= std::conj(c) / std::abs(c);
    }
    bands.vectors = std::move(v);
  }
  return bands;
}

/// Band gradient by Hellmann-Feynman: grad lambda_p = 2 sum_G (k+G) |c_G|^2.
/// `band` is 1-based.
template <typename Scalar, typename Derived>
VectorX<Scalar> band_gradient(const BlochProblem<Scalar>& problem, const Eigen::MatrixBase<Derived>& k, int band) {
  if (band < 1 || band > problem.basis_size()) throw ValidationError("band_gradient: band index out of range");
  const int p_max = std::min<int>(band + 1, static_cast<int>(problem.basis_size()));
  const BandSet<Scalar> bands = solve_bands(problem, k, p_max, true);
  const Scalar lambda = bands.values(band - 1);
  const Scalar tol = degeneracy_tolerance(lambda);
  if ((band > 1 && lambda - bands.values(band - 2) <= tol) || (band < p_max && bands.values(band) - lambda <= tol))
    throw DegeneracyError("band " + std::to_string(band) + " is degenerate at k = " + detail::format_k(k));
  const auto& c = bands.vectors->col(band - 1);
  VectorX<Scalar> grad = VectorX<Scalar>::Zero(problem.dimension());
  for (Eigen::Index g = 0; g < problem.basis_size(); ++g)
    grad += 2 * std::norm(c(g)) * (problem.basis_vectors().col(g) + k);
  return grad;
}

/// Default finite-difference step for k-derivatives: 1e-3 diam(E*).
template <typename Scalar>
Scalar default_fd_step(const BlochProblem<Scalar>& problem) {
  return Scalar(1e-3) * problem.dual().diameter();
}

namespace detail {

// Band value with a simplicity check against its neighbours.
template <typename Scalar>
Scalar simple_band_value(const BlochProblem<Scalar>& problem, const VectorX<Scalar>& k, int band) {
  const int p_max = std::min<int>(band + 1, static_cast<int>(problem.basis_size()));
  const VectorX<Scalar> v = solve_bands(problem, k, p_max).values;
  const Scalar lambda = v(band - 1);
  const Scalar tol = degeneracy_tolerance(lambda);
  if ((band > 1 && lambda - v(band - 2) <= tol) || (band < p_max && v(band) - lambda <= tol))
    throw DegeneracyError("band " + std::to_string(band) + " is degenerate on the stencil at k = " + format_k(k));
  return v(band - 1);
}

}  // namespace detail

/// Laplacian of lambda_p by second-order central differences with one
/// Richardson halving of `step`.
template <typename Scalar, typename Derived>
Scalar band_laplacian(const BlochProblem<Scalar>& problem, const Eigen::MatrixBase<Derived>& k, int band,
                      std::optional<Scalar> step = std::nullopt) {
  if (band < 1 || band > problem.basis_size()) throw ValidationError("band_laplacian: band index out of range");
  const Scalar h0 = step.value_or(default_fd_step(problem));
  if (!(h0 > 0)) throw ValidationError("band_laplacian: step must be positive");
  const int n = problem.dimension();
  const VectorX<Scalar> k0 = k;
  const Scalar center = detail::simple_band_value(problem, k0, band);
  auto second_difference = [&](Scalar h) {
    Scalar sum = 0;
    for (int i = 0; i < n; ++i) {
      VectorX<Scalar> kp = k0, km = k0;
      kp(i) += h;
      km(i) -= h;
      sum += (detail::simple_band_value(problem, kp, band) - 2 * center +
              detail::simple_band_value(problem, km, band)) /
             (h * h);
    }
    return sum;
  };
  const Scalar coarse = second_difference(h0);
  const Scalar fine = second_difference(h0 / 2);
  return (4 * fine - coarse) / 3;
}

}  // namespace bandshift
