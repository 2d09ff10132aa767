#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "polyiso/manifold.hpp"

using namespace polyiso;

namespace {

constexpr double kPi = std::numbers::pi;

template <class F>
void expect_error(ErrorCode code, F&& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

Vector residual_vector(const Vector& z) {
  const ConstraintResiduals r = residuals(ManifoldPoint::from_stacked(z));
  Vector v(4);
  v << r.angle_sum, r.radius_sum, r.barycenter_cos, r.barycenter_sin;
  return v;
}

}  // namespace

TEST(Residuals, StarIsOnManifold) {
  for (int n = 3; n <= 20; ++n) {
    EXPECT_LT(residuals(ManifoldPoint::star(n)).max_abs(), 1e-13) << n;
    EXPECT_NO_THROW(require_on_manifold(ManifoldPoint::star(n)));
  }
}

TEST(Residuals, VertexAnglesStartAtZero) {
  Vector x(4);
  x << 0.5, 1.0, 2.0, 2.0 * kPi - 3.5;
  const Vector theta = vertex_angles<double>(x);
  EXPECT_EQ(theta[0], 0.0);
  EXPECT_DOUBLE_EQ(theta[1], 0.5);
  EXPECT_DOUBLE_EQ(theta[3], 3.5);
}

TEST(Jacobian, MatchesCentralDifferences) {
  std::mt19937_64 rng(5);
  for (int n : {3, 5, 9}) {
    const ManifoldPoint m = sample(n, rng, 1000).point;
    const Matrix jac = constraint_jacobian(m);
    const Vector z = m.stacked();
    const double h = 1e-6;
    for (int j = 0; j < 2 * n; ++j) {
      Vector zp = z, zm = z;
      zp[j] += h;
      zm[j] -= h;
      const Vector col = (residual_vector(zp) - residual_vector(zm)) / (2 * h);
      EXPECT_LT((col - jac.col(j)).cwiseAbs().maxCoeff(), 1e-8) << "n=" << n << " col=" << j;
    }
  }
}

TEST(TangentBasis, DimensionAndOrthonormality) {
  std::mt19937_64 rng(6);
  for (int n = 3; n <= 12; ++n) {
    for (const ManifoldPoint& m : {ManifoldPoint::star(n), sample(n, rng, 1000).point}) {
      const TangentBasis t = tangent_basis(m);
      EXPECT_EQ(t.dimension(), 2 * n - 4);
      EXPECT_EQ(t.ambient_dimension(), 2 * n);
      const Matrix gram = t.vectors.transpose() * t.vectors;
      EXPECT_LT((gram - Matrix::Identity(2 * n - 4, 2 * n - 4)).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LT((constraint_jacobian(m) * t.vectors).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(TangentBasis, Errors) {
  expect_error(ErrorCode::DimensionMismatch, [] { tangent_basis_at_star(2); });
}

TEST(ParticularRadii, TriangleMatchesCramer) {
  // For n = 3 the radius constraints are a square system; solve it by Cramer's rule.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.3, 1.0);
  for (int k = 0; k < 200; ++k) {
    Vector x(3);
    x << u(rng), u(rng), 0.0;
    x[2] = 2.0 * kPi - x[0] - x[1];
    if (x[2] >= kPi) continue;
    const double t1 = x[0], t2 = x[0] + x[1];
    const double a[3][3] = {{1, 1, 1}, {1, std::cos(t1), std::cos(t2)}, {0, std::sin(t1), std::sin(t2)}};
    const double b[3] = {3, 0, 0};
    auto det = [](const double m[3][3]) {
      return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
             m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
             m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    };
    const double d = det(a);
    const Vector r = particular_radii(x);
    for (int c = 0; c < 3; ++c) {
      double m[3][3];
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m[i][j] = j == c ? b[i] : a[i][j];
      EXPECT_NEAR(r[c], det(m) / d, 1e-10);
    }
  }
}

TEST(Sample, MembershipAndDomain) {
  std::mt19937_64 rng(8);
  for (int n = 3; n <= 16; ++n) {
    for (int k = 0; k < 200; ++k) {
      const ManifoldSample s = sample(n, rng, 1000);
      EXPECT_LE(s.residuals.max_abs(), 1e-9);
      EXPECT_GT(s.point.x.minCoeff(), 0.0);
      EXPECT_LT(s.point.x.maxCoeff(), kPi);
      EXPECT_GE(s.point.r.minCoeff(), kMinRadius);
      EXPECT_EQ(s.convex, image_is_convex(s.point));
      EXPECT_GE(s.attempts_used, 1);
    }
  }
}

TEST(Sample, SeedReproducible) {
  const ManifoldSample a = sample(7, std::uint64_t{42}, 100);
  const ManifoldSample b = sample(7, std::uint64_t{42}, 100);
  EXPECT_EQ(a.point.stacked(), b.point.stacked());
  const ManifoldSample c = sample(7, std::uint64_t{43}, 100);
  EXPECT_NE(a.point.stacked(), c.point.stacked());
}

TEST(Sample, ProducesBothConvexAndNonconvex) {
  std::mt19937_64 rng(9);
  int convex = 0;
  for (int k = 0; k < 500; ++k) convex += sample(10, rng, 1000).convex ? 1 : 0;
  EXPECT_GT(convex, 100);
  EXPECT_LT(convex, 500);
}

TEST(Sample, Errors) {
  std::mt19937_64 rng(10);
  expect_error(ErrorCode::SamplingExhausted, [&] { sample(5, rng, 0); });
  expect_error(ErrorCode::SamplingExhausted, [&] { sample_convex(5, rng, 0); });
  expect_error(ErrorCode::DimensionMismatch, [&] { sample(2, rng, 10); });
}

TEST(SampleConvex, AlwaysConvex) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 200; ++k) EXPECT_TRUE(sample_convex(12, rng, 10000).convex);
}

TEST(Retract, FixesPointsOnManifold) {
  std::mt19937_64 rng(12);
  for (int k = 0; k < 100; ++k) {
    const ManifoldPoint m = sample(6, rng, 1000).point;
    EXPECT_LT((retract(m).stacked() - m.stacked()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Retract, ProjectsPerturbations) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g(0.0, 1e-2);
  for (int k = 0; k < 100; ++k) {
    Vector z = ManifoldPoint::star(8).stacked();
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] += g(rng);
    const ManifoldPoint m = retract(z);
    EXPECT_TRUE(residuals(m).on_manifold());
    // Idempotent.
    EXPECT_LT((retract(m).stacked() - m.stacked()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Retract, Errors) {
  expect_error(ErrorCode::DimensionMismatch, [] { retract(Vector::Ones(7)); });
  expect_error(ErrorCode::DimensionMismatch, [] { retract(Vector::Ones(4)); });
  Vector z = ManifoldPoint::star(4).stacked();
  z[0] = 10.0;  // rescaled angle still above pi
  expect_error(ErrorCode::RetractionFailed, [&] { retract(z); });
  z = ManifoldPoint::star(4).stacked();
  z[4] = -5.0;
  expect_error(ErrorCode::RetractionFailed, [&] { retract(z); });
}

TEST(SampleNearStar, DistanceScalesWithT) {
  std::mt19937_64 rng(14);
  for (double t : {1e-2, 1e-3, 1e-4}) {
    const ManifoldSample s = sample_near_star(7, t, rng);
    const double d = (s.point.stacked() - ManifoldPoint::star(7).stacked()).norm();
    EXPECT_NEAR(d, t, 10 * t * t);
    EXPECT_TRUE(s.convex);
  }
}

TEST(RandomTangentDirection, UnitAndTangent) {
  std::mt19937_64 rng(15);
  const TangentBasis basis = tangent_basis_at_star(9);
  const Matrix jac = constraint_jacobian(ManifoldPoint::star(9));
  for (int k = 0; k < 50; ++k) {
    const Vector w = random_tangent_direction(basis, rng);
    EXPECT_NEAR(w.norm(), 1.0, 1e-14);
    EXPECT_LT((jac * w).cwiseAbs().maxCoeff(), 1e-13);
  }
}
