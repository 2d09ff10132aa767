#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "polyiso/error.hpp"

namespace polyiso {

template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Absolute tolerance on each constraint residual for membership in M.
inline constexpr double kManifoldTol = 1e-9;
/// Radii below this are treated as degenerate (central angles ill-defined).
inline constexpr double kMinRadius = 1e-12;

/// A point (x; r) of the polygonal manifold: central angles x and radii r,
/// with the first vertex on the positive horizontal axis.
struct ManifoldPoint {
  Vector x;
  Vector r;

  Eigen::Index n() const { return x.size(); }

  /// (x; r) as one 2n-vector.
  Vector stacked() const {
    Vector z(2 * n());
    z << x, r;
    return z;
  }

  static ManifoldPoint from_stacked(const Vector& z) {
    if (z.size() % 2 != 0) {
      throw Error(ErrorCode::DimensionMismatch, "stacked coordinates must have even length");
    }
    const Eigen::Index n = z.size() / 2;
    return {z.head(n), z.tail(n)};
  }

  /// The regular n-gon z* = (2pi/n, ..., 2pi/n; 1, ..., 1).
  static ManifoldPoint star(int n) {
    return {Vector::Constant(n, 2.0 * std::numbers::pi / n), Vector::Ones(n)};
  }
};

struct ConstraintResiduals {
  double angle_sum = 0.0;
  double radius_sum = 0.0;
  double barycenter_cos = 0.0;
  double barycenter_sin = 0.0;

  double max_abs() const {
    return std::max({std::abs(angle_sum), std::abs(radius_sum), std::abs(barycenter_cos),
                     std::abs(barycenter_sin)});
  }
  bool on_manifold(double tol = kManifoldTol) const { return max_abs() < tol; }
};

/// Polar angles theta_i = x_1 + ... + x_{i-1} of the vertices.
template <class Scalar>
VectorX<Scalar> vertex_angles(const VectorX<Scalar>& x) {
  VectorX<Scalar> theta(x.size());
  Scalar acc = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    theta[i] = acc;
    acc += x[i];
  }
  return theta;
}

/// The four constraint residuals of M, evaluated exactly as the constraint
/// equations read. No validation beyond matching lengths.
inline ConstraintResiduals residuals(const ManifoldPoint& m) {
  if (m.x.size() != m.r.size()) {
    throw Error(ErrorCode::DimensionMismatch, "x and r must have equal length");
  }
  const Eigen::Index n = m.n();
  const Vector theta = vertex_angles<double>(m.x);
  ConstraintResiduals res;
  res.angle_sum = m.x.sum() - 2.0 * std::numbers::pi;
  res.radius_sum = m.r.sum() - static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    res.barycenter_cos += m.r[i] * std::cos(theta[i]);
    res.barycenter_sin += m.r[i] * std::sin(theta[i]);
  }
  return res;
}

/// Throws InvalidManifoldPoint unless m lies on M with nondegenerate radii
/// and central angles in (0, pi).
inline void require_on_manifold(const ManifoldPoint& m, double tol = kManifoldTol) {
  if (m.x.size() != m.r.size()) {
    throw Error(ErrorCode::DimensionMismatch, "x and r must have equal length");
  }
  if (m.n() < 3) {
    throw Error(ErrorCode::InvalidManifoldPoint, "need n >= 3");
  }
  if (!m.x.allFinite() || !m.r.allFinite()) {
    throw Error(ErrorCode::InvalidManifoldPoint, "non-finite coordinate");
  }
  if (m.r.minCoeff() < kMinRadius) {
    throw Error(ErrorCode::InvalidManifoldPoint, "radius below minimum");
  }
  if (m.x.minCoeff() <= 0.0 || m.x.maxCoeff() >= std::numbers::pi) {
    throw Error(ErrorCode::InvalidManifoldPoint, "central angle outside (0, pi)");
  }
  const ConstraintResiduals res = residuals(m);
  if (!res.on_manifold(tol)) {
    throw Error(ErrorCode::InvalidManifoldPoint,
                "constraint residual " + std::to_string(res.max_abs()) + " exceeds tolerance");
  }
}

}  // namespace polyiso
