#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

#include "bandshift/errors.hpp"

namespace bandshift {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Bravais lattice generated by the columns e_1..e_n of `basis`.
template <typename Scalar = double>
class Lattice {
 public:
  explicit Lattice(MatrixX<Scalar> basis) : basis_(std::move(basis)) {
    if (basis_.rows() == 0 || basis_.rows() != basis_.cols())
      throw DegenerateLatticeError("lattice basis must be a non-empty square matrix");
    const Scalar det = basis_.determinant();
    Scalar scale = 1;
    for (Eigen::Index i = 0; i < basis_.cols(); ++i) scale *= basis_.col(i).norm();
    if (!(std::abs(det) > Scalar(1e-12) * scale))
      throw DegenerateLatticeError("lattice basis vectors are linearly dependent");
    volume_ = std::abs(det);
  }

  int dimension() const { return static_cast<int>(basis_.rows()); }
  const MatrixX<Scalar>& basis() const { return basis_; }
  Scalar cell_volume() const { return volume_; }

 private:
  MatrixX<Scalar> basis_;
  Scalar volume_{};
};

/// Dual lattice: columns satisfy <e_i, e*_j> = 2*pi*delta_ij.
///
/// The Brillouin zone E* is the centred box {sum c_i e*_i : c_i in [-1/2, 1/2)}.
template <typename Scalar = double>
class DualLattice {
 public:
  explicit DualLattice(MatrixX<Scalar> basis)
      : basis_(std::move(basis)), inverse_(basis_.inverse()), volume_(std::abs(basis_.determinant())) {}

  int dimension() const { return static_cast<int>(basis_.rows()); }
  const MatrixX<Scalar>& basis() const { return basis_; }
  Scalar bz_volume() const { return volume_; }

  /// Coordinates of k in the dual basis.
  template <typename Derived>
  VectorX<Scalar> coordinates(const Eigen::MatrixBase<Derived>& k) const {
    return inverse_ * k;
  }

  /// Largest distance between two points of E*.
  Scalar diameter() const {
    const int n = dimension();
    Scalar best = 0;
    VectorX<Scalar> signs(n);
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      for (int i = 0; i < n; ++i) signs(i) = (mask >> i) & 1u ? Scalar(1) : Scalar(-1);
      best = std::max(best, (basis_ * signs).norm());
    }
    return best;
  }

 private:
  MatrixX<Scalar> basis_;
  MatrixX<Scalar> inverse_;
  Scalar volume_;
};

template <typename Scalar>
DualLattice<Scalar> dual_basis(const Lattice<Scalar>& lattice) {
  const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
  return DualLattice<Scalar>(two_pi * lattice.basis().inverse().transpose());
}

/// Representative of k modulo the dual lattice inside E*.
template <typename Scalar, typename Derived>
VectorX<Scalar> reduce_to_bz(const Eigen::MatrixBase<Derived>& k, const DualLattice<Scalar>& dual) {
  VectorX<Scalar> c = dual.coordinates(k);
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    c(i) -= std::floor(c(i) + Scalar(0.5));
    // Round-off can land exactly on the excluded upper face.
    if (c(i) >= Scalar(0.5)) c(i) -= Scalar(1);
  }
  return dual.basis() * c;
}

/// Quadrature points over E*; weights sum to vol(E*).
template <typename Scalar = double>
struct BZGrid {
  MatrixX<Scalar> points;   // n x K, one k-point per column
  VectorX<Scalar> weights;  // K
  std::vector<int> resolution;

  Eigen::Index size() const { return weights.size(); }
  int dimension() const { return static_cast<int>(points.rows()); }
};

/// Uniform Monkhorst-Pack product grid: coordinates (2j - N + 1) / (2N), j = 0..N-1.
template <typename Scalar>
BZGrid<Scalar> bz_grid(const DualLattice<Scalar>& dual, const std::vector<int>& resolution) {
  const int n = dual.dimension();
  if (static_cast<int>(resolution.size()) != n)
    throw ValidationError("bz_grid: one resolution per axis is required");
  Eigen::Index total = 1;
  for (int r : resolution) {
    if (r < 1) throw ValidationError("bz_grid: resolution must be >= 1");
    total *= r;
  }
  BZGrid<Scalar> grid;
  grid.resolution = resolution;
  grid.points.resize(n, total);
  grid.weights = VectorX<Scalar>::Constant(total, dual.bz_volume() / Scalar(total));
  std::vector<int> idx(n, 0);
  VectorX<Scalar> c(n);
  for (Eigen::Index p = 0; p < total; ++p) {
    for (int i = 0; i < n; ++i)
      c(i) = Scalar(2 * idx[i] - resolution[i] + 1) / Scalar(2 * resolution[i]);
    grid.points.col(p) = dual.basis() * c;
    for (int i = 0; i < n; ++i) {  // odometer, first axis fastest
      if (++idx[i] < resolution[i]) break;
      idx[i] = 0;
    }
  }
  return grid;
}

template <typename Scalar>
BZGrid<Scalar> bz_grid(const DualLattice<Scalar>& dual, int resolution) {
  return bz_grid(dual, std::vector<int>(dual.dimension(), resolution));
}

}  // namespace bandshift
