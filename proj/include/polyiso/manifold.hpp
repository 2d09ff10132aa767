#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>

#include "polyiso/constraints.hpp"
#include "polyiso/error.hpp"
#include "polyiso/polygon.hpp"

namespace polyiso {

/// Orthonormal basis (as columns) of the tangent space of M at a point.
struct TangentBasis {
  Matrix vectors;

  Eigen::Index dimension() const { return vectors.cols(); }
  Eigen::Index ambient_dimension() const { return vectors.rows(); }
};

/// The 4 x 2n Jacobian of the constraint map (angle sum, radius sum,
/// barycenter cosine and sine sums) at m. Rows follow ConstraintResiduals.
inline Matrix constraint_jacobian(const ManifoldPoint& m) {
  const Eigen::Index n = m.n();
  const Vector theta = vertex_angles<double>(m.x);
  Matrix jac = Matrix::Zero(4, 2 * n);
  jac.row(0).head(n).setOnes();
  jac.row(1).tail(n).setOnes();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c = std::cos(theta[i]);
    const double s = std::sin(theta[i]);
    jac(2, n + i) = c;
    jac(3, n + i) = s;
    // theta_i depends on x_k for every k < i.
    for (Eigen::Index k = 0; k < i; ++k) {
      jac(2, k) -= m.r[i] * s;
      jac(3, k) += m.r[i] * c;
    }
  }
  return jac;
}

/// Orthonormal null space of the constraint Jacobian at m; dimension 2n - 4.
inline TangentBasis tangent_basis(const ManifoldPoint& m) {
  const Matrix jac = constraint_jacobian(m);
  const Eigen::JacobiSVD<Matrix> svd(jac, Eigen::ComputeFullV);
  const Eigen::Index rank = svd.rank();
  const Eigen::Index dim = jac.cols() - rank;
  return {svd.matrixV().rightCols(dim)};
}

inline TangentBasis tangent_basis_at_star(int n) {
  if (n < 3) throw Error(ErrorCode::DimensionMismatch, "need n >= 3");
  return tangent_basis(ManifoldPoint::star(n));
}

/// The 3 x n matrix of the constraints that are linear in r for fixed x:
/// radius sum and the two barycenter sums.
inline Matrix radius_constraint_matrix(const Vector& x) {
  const Eigen::Index n = x.size();
  const Vector theta = vertex_angles<double>(x);
  Matrix a(3, n);
  a.row(0).setOnes();
  for (Eigen::Index i = 0; i < n; ++i) {
    a(1, i) = std::cos(theta[i]);
    a(2, i) = std::sin(theta[i]);
  }
  return a;
}

inline Vector radius_constraint_rhs(Eigen::Index n) {
  Vector b = Vector::Zero(3);
  b[0] = static_cast<double>(n);
  return b;
}

/// Minimum-norm radii satisfying the radius-sum and barycenter constraints for
/// the given central angles. For n = 3 this is the unique solution.
inline Vector particular_radii(const Vector& x) {
  const Matrix a = radius_constraint_matrix(x);
  return a.completeOrthogonalDecomposition().solve(radius_constraint_rhs(x.size()));
}

/// Tuning for sample(). Each attempt draws its Dirichlet concentration and its
/// kernel spread log-uniformly from the given ranges, so a batch covers both
/// near-regular and strongly irregular polygons.
struct SamplerOptions {
  double concentration_min = 2.0;
  double concentration_max = 200.0;
  double spread_min = 1e-3;
  double spread_max = 0.3;
};

struct ManifoldSample {
  ManifoldPoint point;
  bool convex = false;
  ConstraintResiduals residuals;
  int attempts_used = 0;
};

namespace detail {

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  if (lo >= hi) return lo;
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

inline Vector dirichlet_angles(Eigen::Index n, double concentration, std::mt19937_64& rng) {
  std::gamma_distribution<double> gamma(concentration, 1.0);
  Vector g(n);
  for (Eigen::Index i = 0; i < n; ++i) g[i] = gamma(rng);
  return g * (2.0 * std::numbers::pi / g.sum());
}

inline ManifoldSample finish_sample(ManifoldPoint p, int attempts_used) {
  ManifoldSample s;
  s.residuals = residuals(p);
  s.convex = image_is_convex(p);
  s.point = std::move(p);
  s.attempts_used = attempts_used;
  return s;
}

}  // namespace detail

/// Draws a point of M: x from a symmetric Dirichlet law scaled to 2pi, then r
/// as the particular solution of the linear radius constraints plus a Gaussian
/// combination of their kernel. Draws with x_i >= pi or r_i below the minimum
/// radius are rejected. Convexity is reported, not enforced.
inline ManifoldSample sample(int n, std::mt19937_64& rng, int attempts,
                             const SamplerOptions& opts = {}) {
  if (n < 3) throw Error(ErrorCode::DimensionMismatch, "need n >= 3");
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    const double alpha = detail::log_uniform(rng, opts.concentration_min, opts.concentration_max);
    const double spread = detail::log_uniform(rng, opts.spread_min, opts.spread_max);
    Vector x = detail::dirichlet_angles(n, alpha, rng);
    if (x.minCoeff() <= 0.0 || x.maxCoeff() >= std::numbers::pi) continue;

    const Matrix a = radius_constraint_matrix(x);
    const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
    Vector r = cod.solve(radius_constraint_rhs(n));
    if (n > 3) {
      const Eigen::HouseholderQR<Matrix> qr(a.transpose());
      const Matrix q = qr.householderQ();
      Vector c(n - 3);
      for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = spread * normal(rng);
      r += q.rightCols(n - 3) * c;
    }
    if (r.minCoeff() < kMinRadius) continue;
    ManifoldPoint p{std::move(x), std::move(r)};
    if (!residuals(p).on_manifold()) continue;
    return detail::finish_sample(std::move(p), attempt);
  }
  throw Error(ErrorCode::SamplingExhausted,
              "no admissible point after " + std::to_string(attempts) + " attempts");
}

inline ManifoldSample sample(int n, std::uint64_t seed, int attempts,
                             const SamplerOptions& opts = {}) {
  std::mt19937_64 rng(seed);
  return sample(n, rng, attempts, opts);
}

/// Draws from sample() until the image is convex; `attempts` bounds the total
/// number of draws.
inline ManifoldSample sample_convex(int n, std::mt19937_64& rng, int attempts,
                                    const SamplerOptions& opts = {}) {
  int used = 0;
  while (used < attempts) {
    ManifoldSample s = sample(n, rng, attempts - used, opts);
    used += s.attempts_used;
    if (s.convex) {
      s.attempts_used = used;
      return s;
    }
  }
  throw Error(ErrorCode::SamplingExhausted,
              "no convex point after " + std::to_string(attempts) + " attempts");
}

/// Uniformly random unit vector in the tangent space spanned by basis.
inline Vector random_tangent_direction(const TangentBasis& basis, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector c(basis.dimension());
  for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = normal(rng);
  return basis.vectors * c.normalized();
}

/// Projects a point near M back onto M: x is rescaled to sum 2pi, then r is
/// moved to the nearest solution of the linear radius constraints for that x.
inline ManifoldPoint retract(const Vector& z) {
  if (z.size() < 6 || z.size() % 2 != 0) {
    throw Error(ErrorCode::DimensionMismatch, "stacked coordinates must have even length >= 6");
  }
  const Eigen::Index n = z.size() / 2;
  const double angle_sum = z.head(n).sum();
  if (!(angle_sum > 0.0)) throw Error(ErrorCode::RetractionFailed, "angle sum not positive");
  Vector x = z.head(n) * (2.0 * std::numbers::pi / angle_sum);
  if (x.minCoeff() <= 0.0 || x.maxCoeff() >= std::numbers::pi) {
    throw Error(ErrorCode::RetractionFailed, "central angle leaves (0, pi)");
  }
  const Matrix a = radius_constraint_matrix(x);
  const Vector defect = a * z.tail(n) - radius_constraint_rhs(n);
  const Vector lambda = (a * a.transpose()).ldlt().solve(defect);
  Vector r = z.tail(n) - a.transpose() * lambda;
  if (r.minCoeff() < kMinRadius) {
    throw Error(ErrorCode::RetractionFailed, "radius leaves the admissible range");
  }
  ManifoldPoint p{std::move(x), std::move(r)};
  if (!residuals(p).on_manifold()) {
    throw Error(ErrorCode::RetractionFailed, "projection did not reach the manifold");
  }
  return p;
}

inline ManifoldPoint retract(const ManifoldPoint& m) { return retract(m.stacked()); }

/// z* + t w for a random unit tangent w at z*, retracted onto M.
inline ManifoldSample sample_near_star(int n, double t, std::mt19937_64& rng) {
  const TangentBasis basis = tangent_basis_at_star(n);
  const Vector w = random_tangent_direction(basis, rng);
  return detail::finish_sample(retract(ManifoldPoint::star(n).stacked() + t * w), 1);
}

}  // namespace polyiso
