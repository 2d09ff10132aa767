#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "polyiso/constraints.hpp"
#include "polyiso/error.hpp"

namespace polyiso {

/// The symmetric circulant matrix generated by (n-1, -1, ..., -1), its closed-form
/// spectrum and the real orthogonal eigenbasis of cosine and sine vectors.
struct CirculantSystem {
  int n = 0;
  Vector generator;
  Matrix matrix;
  /// lambda_0 = 0, lambda_k = n for k >= 1; integral, hence stored exactly.
  std::vector<long> eigenvalues;
  /// v_0, ..., v_{n-1} as columns; column k is an eigenvector for
  /// eigenvalue_of_basis(k).
  Matrix basis;

  /// Eigenvalue paired with basis column k: lambda_{ceil(k/2)}.
  long eigenvalue_of_basis(int k) const { return eigenvalues[static_cast<std::size_t>((k + 1) / 2)]; }
};

inline CirculantSystem build_circulant(int n) {
  if (n < 3) throw Error(ErrorCode::DimensionMismatch, "need n >= 3");
  CirculantSystem c;
  c.n = n;
  c.generator = Vector::Constant(n, -1.0);
  c.generator[0] = n - 1.0;
  c.matrix.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) c.matrix(i, j) = c.generator[((j - i) % n + n) % n];
  }
  c.eigenvalues.assign(static_cast<std::size_t>(n), n);
  c.eigenvalues[0] = 0;

  c.basis = Matrix::Zero(n, n);
  c.basis.col(0).setOnes();
  // For even n the sine vector at l = n/2 vanishes identically and is skipped,
  // leaving exactly n columns.
  for (int l = 1; l <= n / 2; ++l) {
    for (int j = 0; j < n; ++j) {
      const double angle = 2.0 * std::numbers::pi * l * j / n;
      c.basis(j, 2 * l - 1) = std::cos(angle);
      if (2 * l < n) c.basis(j, 2 * l) = std::sin(angle);
    }
  }
  return c;
}

/// The 2n x 2n matrix D^2 phi(z*): blocks n sin(2pi/n) C and 2 C on the
/// diagonal, zero elsewhere.
struct BlockHessian {
  int n = 0;
  Matrix matrix;

  double angle_weight() const { return n * std::sin(2.0 * std::numbers::pi / n); }
};

inline BlockHessian build_phi(int n) {
  const CirculantSystem c = build_circulant(n);
  BlockHessian phi;
  phi.n = n;
  phi.matrix = Matrix::Zero(2 * n, 2 * n);
  phi.matrix.topLeftCorner(n, n) = phi.angle_weight() * c.matrix;
  phi.matrix.bottomRightCorner(n, n) = 2.0 * c.matrix;
  return phi;
}

inline double quadratic_form(const BlockHessian& phi, const Vector& z) {
  if (z.size() != phi.matrix.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "expected a vector of length 2n");
  }
  return z.dot(phi.matrix * z);
}

/// <Phi z, z> evaluated through the expansion z = sum alpha_k b_k in the
/// block eigenbasis b_k = (v_{k-1}; 0), (0; v_{k-n-1}).
inline double quadratic_form_spectral(const CirculantSystem& c, const Vector& z) {
  const int n = c.n;
  if (z.size() != 2 * n) {
    throw Error(ErrorCode::DimensionMismatch, "expected a vector of length 2n");
  }
  const double angle_weight = static_cast<double>(n) * n * std::sin(2.0 * std::numbers::pi / n);
  double value = 0.0;
  for (int k = 1; k < n; ++k) {
    const auto v = c.basis.col(k);
    const double norm2 = v.squaredNorm();
    const double alpha_x = z.head(n).dot(v) / norm2;
    const double alpha_r = z.tail(n).dot(v) / norm2;
    value += angle_weight * alpha_x * alpha_x * norm2 + 2.0 * n * alpha_r * alpha_r * norm2;
  }
  return value;
}

/// Orthonormal basis (columns) of Z = {sum x = 0, sum r = 0} in R^{2n}.
inline Matrix zero_mean_basis(int n) {
  Matrix constraints = Matrix::Zero(2, 2 * n);
  constraints.row(0).head(n).setOnes();
  constraints.row(1).tail(n).setOnes();
  const Eigen::JacobiSVD<Matrix> svd(constraints, Eigen::ComputeFullV);
  return svd.matrixV().rightCols(2 * n - 2);
}

struct CoercivityBound {
  double closed_form = 0.0;  // min(n^2 sin(2pi/n), 2n)
  double dense = 0.0;        // smallest eigenvalue of Phi restricted to Z
};

/// Minimum of <Phi z, z> / |z|^2 over Z, computed from the spectral expansion
/// and from a dense eigensolve; the two must agree.
inline CoercivityBound min_eig_on_Z(int n) {
  const BlockHessian phi = build_phi(n);
  const Matrix q = zero_mean_basis(n);
  const Matrix restricted = q.transpose() * phi.matrix * q;
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(restricted, Eigen::EigenvaluesOnly);
  CoercivityBound bound;
  bound.closed_form =
      std::min(static_cast<double>(n) * n * std::sin(2.0 * std::numbers::pi / n), 2.0 * n);
  bound.dense = eig.eigenvalues().minCoeff();
  if (!(bound.dense > 0.0) ||
      std::abs(bound.dense - bound.closed_form) > 1e-9 * bound.closed_form) {
    throw Error(ErrorCode::InternalInconsistency,
                "coercivity routes disagree: " + std::to_string(bound.dense) + " vs " +
                    std::to_string(bound.closed_form));
  }
  return bound;
}

}  // namespace polyiso
