#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "polyiso/constraints.hpp"
#include "polyiso/error.hpp"

namespace polyiso {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }

/// Scalar functionals of an n-gon. All variances are population variances
/// (mean square minus squared mean).
template <class Scalar>
struct Functionals {
  Scalar perimeter = 0;        // L
  Scalar area = 0;             // |P|
  Scalar side_square_sum = 0;  // S
  Scalar deficit = 0;          // L^2 - 4n tan(pi/n) |P|
  Scalar side_variance = 0;    // sigma_s^2
  Scalar radius_variance = 0;  // sigma_r^2
  Scalar angle_variance = 0;   // sigma_a^2
  Scalar phi = 0;              // n^2 (|P| sigma_a^2 + sigma_r^2)
};

using PolygonSummary = Functionals<double>;

template <class Scalar>
Scalar isoperimetric_factor(Eigen::Index n) {
  using std::tan;
  return 4 * static_cast<Scalar>(n) * tan(std::numbers::pi_v<Scalar> / static_cast<Scalar>(n));
}

/// (1/n) sum v_i^2 - (1/n^2) (sum v_i)^2, evaluated as the mean squared
/// deviation to avoid cancellation.
template <class Scalar>
Scalar variance(const VectorX<Scalar>& v) {
  const auto n = static_cast<Scalar>(v.size());
  const Scalar mean = v.sum() / n;
  return (v.array() - mean).square().sum() / n;
}

/// l_i = (r_{i+1}^2 + r_i^2 - 2 r_{i+1} r_i cos x_i)^{1/2}, indices mod n.
template <class Scalar>
VectorX<Scalar> side_lengths(const VectorX<Scalar>& x, const VectorX<Scalar>& r) {
  using std::cos;
  using std::sqrt;
  const Eigen::Index n = x.size();
  VectorX<Scalar> l(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar a = r[i];
    const Scalar b = r[(i + 1) % n];
    const Scalar sq = a * a + b * b - 2 * a * b * cos(x[i]);
    l[i] = sqrt(sq > 0 ? sq : Scalar(0));
  }
  return l;
}

/// Raw (x; r) formulas with no membership checks; valid on all of R^{2n}, which
/// is what the finite-difference oracles need.
template <class Scalar>
Functionals<Scalar> evaluate(const VectorX<Scalar>& x, const VectorX<Scalar>& r) {
  using std::sin;
  const Eigen::Index n = x.size();
  const VectorX<Scalar> l = side_lengths<Scalar>(x, r);
  Functionals<Scalar> f;
  f.perimeter = l.sum();
  f.side_square_sum = l.squaredNorm();
  Scalar twice_area = 0;
  for (Eigen::Index i = 0; i < n; ++i) twice_area += r[i] * r[(i + 1) % n] * sin(x[i]);
  f.area = twice_area / 2;
  f.deficit = f.perimeter * f.perimeter - isoperimetric_factor<Scalar>(n) * f.area;
  f.side_variance = variance<Scalar>(l);
  f.radius_variance = variance<Scalar>(r);
  f.angle_variance = variance<Scalar>(x);
  const auto nn = static_cast<Scalar>(n * n);
  f.phi = nn * (f.area * f.angle_variance + f.radius_variance);
  return f;
}

/// delta as a function of the stacked coordinates z = (x; r).
template <class Scalar>
Scalar deficit_of(const VectorX<Scalar>& z) {
  const Eigen::Index n = z.size() / 2;
  return evaluate<Scalar>(z.head(n), z.tail(n)).deficit;
}

/// phi as a function of the stacked coordinates z = (x; r).
template <class Scalar>
Scalar phi_of(const VectorX<Scalar>& z) {
  const Eigen::Index n = z.size() / 2;
  return evaluate<Scalar>(z.head(n), z.tail(n)).phi;
}

namespace detail {

inline double signed_area(std::span<const Point> pts) {
  double twice = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) twice += cross(pts[i], pts[(i + 1) % pts.size()]);
  return twice / 2.0;
}

inline double perimeter(std::span<const Point> pts) {
  double len = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) len += norm(pts[(i + 1) % pts.size()] - pts[i]);
  return len;
}

inline Point mean(std::span<const Point> pts) {
  Point c;
  for (const Point& p : pts) c = c + p;
  return (1.0 / static_cast<double>(pts.size())) * c;
}

inline double diameter_bound(std::span<const Point> pts) {
  double lo_x = pts[0].x, hi_x = pts[0].x, lo_y = pts[0].y, hi_y = pts[0].y;
  for (const Point& p : pts) {
    lo_x = std::min(lo_x, p.x);
    hi_x = std::max(hi_x, p.x);
    lo_y = std::min(lo_y, p.y);
    hi_y = std::max(hi_y, p.y);
  }
  return std::hypot(hi_x - lo_x, hi_y - lo_y);
}

/// Convex (weakly: collinear vertices allowed), turning once, with the vertex
/// barycenter strictly inside. Assumes counterclockwise order.
inline bool is_convex_ccw(std::span<const Point> pts) {
  const std::size_t n = pts.size();
  const double d = diameter_bound(pts);
  const double eps = 1e-12 * d * d;
  double turning = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point e0 = pts[(i + 1) % n] - pts[i];
    const Point e1 = pts[(i + 2) % n] - pts[(i + 1) % n];
    const double c = cross(e0, e1);
    if (c < -eps) return false;
    turning += std::atan2(c, dot(e0, e1));
  }
  if (std::abs(turning - 2.0 * std::numbers::pi) > 1e-6) return false;
  const Point o = mean(pts);
  for (std::size_t i = 0; i < n; ++i) {
    if (cross(pts[(i + 1) % n] - pts[i], o - pts[i]) <= eps) return false;
  }
  return true;
}

}  // namespace detail

/// An ordered, counterclockwise planar polygon. Construct with from_vertices().
class VertexPolygon {
 public:
  const std::vector<Point>& vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  bool convex() const { return convex_; }
  Point barycenter() const { return detail::mean(vertices_); }
  double area() const { return detail::signed_area(vertices_); }
  double perimeter() const { return detail::perimeter(vertices_); }

  std::vector<double> side_lengths() const {
    std::vector<double> l(size());
    for (std::size_t i = 0; i < size(); ++i) l[i] = norm(vertices_[(i + 1) % size()] - vertices_[i]);
    return l;
  }

 private:
  friend VertexPolygon from_vertices(std::vector<Point> points);
  std::vector<Point> vertices_;
  bool convex_ = false;
};

/// Validates a vertex list, normalizes it to counterclockwise order and
/// computes the convexity flag.
inline VertexPolygon from_vertices(std::vector<Point> points) {
  if (points.size() < 3) {
    throw Error(ErrorCode::TooFewVertices, "got " + std::to_string(points.size()) + " vertices");
  }
  const double d = detail::diameter_bound(points);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point& a = points[i];
    const Point& b = points[(i + 1) % points.size()];
    if (!std::isfinite(a.x) || !std::isfinite(a.y)) {
      throw Error(ErrorCode::ParseError, "non-finite vertex coordinate");
    }
    if (norm(b - a) <= 1e-14 * d) {
      throw Error(ErrorCode::DuplicateConsecutiveVertex,
                  "vertices " + std::to_string(i) + " and " +
                      std::to_string((i + 1) % points.size()) + " coincide");
    }
  }
  const double area = detail::signed_area(points);
  if (std::abs(area) <= 1e-14 * d * d) {
    throw Error(ErrorCode::DegenerateZeroArea, "signed area vanishes");
  }
  if (area < 0) std::reverse(points.begin(), points.end());
  VertexPolygon poly;
  poly.vertices_ = std::move(points);
  poly.convex_ = detail::is_convex_ccw(poly.vertices_);
  return poly;
}

/// Central angles about the vertex barycenter, signed, via atan2(cross, dot).
inline std::vector<double> central_angles(const VertexPolygon& poly) {
  const auto& v = poly.vertices();
  const Point o = poly.barycenter();
  std::vector<double> x(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point a = v[i] - o;
    const Point b = v[(i + 1) % v.size()] - o;
    x[i] = std::atan2(cross(a, b), dot(a, b));
  }
  return x;
}

inline std::vector<double> radii(const VertexPolygon& poly) {
  const Point o = poly.barycenter();
  std::vector<double> r;
  r.reserve(poly.size());
  for (const Point& p : poly.vertices()) r.push_back(norm(p - o));
  return r;
}

/// Vertex-space functionals: shoelace area, Euclidean sides, radii and
/// central angles about the vertex barycenter.
inline PolygonSummary summary(const VertexPolygon& poly) {
  const auto n = static_cast<Eigen::Index>(poly.size());
  const std::vector<double> sides = poly.side_lengths();
  const std::vector<double> rad = radii(poly);
  const std::vector<double> ang = central_angles(poly);
  const Vector l = Eigen::Map<const Vector>(sides.data(), n);
  const Vector r = Eigen::Map<const Vector>(rad.data(), n);
  const Vector x = Eigen::Map<const Vector>(ang.data(), n);

  PolygonSummary s;
  s.perimeter = l.sum();
  s.side_square_sum = l.squaredNorm();
  s.area = poly.area();
  s.deficit = s.perimeter * s.perimeter - isoperimetric_factor<double>(n) * s.area;
  s.side_variance = variance<double>(l);
  s.radius_variance = variance<double>(r);
  s.angle_variance = variance<double>(x);
  s.phi = static_cast<double>(n * n) * (s.area * s.angle_variance + s.radius_variance);
  return s;
}

/// A manifold point together with the radius scale n / sum(r) applied to
/// reach it.
struct Reduction {
  ManifoldPoint point;
  double scale = 1.0;
};

inline Reduction to_manifold_point(const VertexPolygon& poly) {
  const auto n = static_cast<Eigen::Index>(poly.size());
  const std::vector<double> ang = central_angles(poly);
  const std::vector<double> rad = radii(poly);
  Vector x = Eigen::Map<const Vector>(ang.data(), n);
  Vector r = Eigen::Map<const Vector>(rad.data(), n);

  if (std::abs(x.sum() - 2.0 * std::numbers::pi) > kManifoldTol) {
    throw Error(ErrorCode::BarycenterOutside,
                "central angles sum to " + std::to_string(x.sum()) + ", not 2pi");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (x[i] <= 0.0) {
      throw Error(ErrorCode::NonpositiveCentralAngle,
                  "central angle " + std::to_string(i) + " is " + std::to_string(x[i]));
    }
  }
  const double raw_sum = r.sum();
  const double scale = static_cast<double>(n) / raw_sum;
  r *= scale;
  if (r.minCoeff() < kMinRadius) {
    throw Error(ErrorCode::ZeroRadius, "a vertex coincides with the barycenter");
  }
  return {{std::move(x), std::move(r)}, scale};
}

/// Vertices A_i = r_i (cos theta_i, sin theta_i) without membership checks.
inline std::vector<Point> place_vertices(const ManifoldPoint& m) {
  const Vector theta = vertex_angles<double>(m.x);
  std::vector<Point> pts(static_cast<std::size_t>(m.n()));
  for (Eigen::Index i = 0; i < m.n(); ++i) {
    pts[static_cast<std::size_t>(i)] = {m.r[i] * std::cos(theta[i]), m.r[i] * std::sin(theta[i])};
  }
  return pts;
}

inline VertexPolygon to_vertices(const ManifoldPoint& m) {
  require_on_manifold(m);
  return from_vertices(place_vertices(m));
}

inline Vector side_lengths(const ManifoldPoint& m) {
  require_on_manifold(m);
  return side_lengths<double>(m.x, m.r);
}

/// Functionals of a manifold point from the (x; r) formulas. The deficit is
/// cross-checked against the shoelace/perimeter computation on the placed
/// vertices.
inline PolygonSummary summary(const ManifoldPoint& m) {
  require_on_manifold(m);
  const PolygonSummary s = evaluate<double>(m.x, m.r);
  if (s.area <= 0.0) {
    throw Error(ErrorCode::NonpositiveArea, "area " + std::to_string(s.area));
  }
  const std::vector<Point> pts = place_vertices(m);
  const double len = detail::perimeter(pts);
  const double vertex_deficit =
      len * len - isoperimetric_factor<double>(m.n()) * detail::signed_area(pts);
  if (std::abs(vertex_deficit - s.deficit) > 1e-9 * std::max(1.0, len * len)) {
    throw Error(ErrorCode::InternalInconsistency,
                "deficit mismatch between coordinate systems: " + std::to_string(s.deficit) +
                    " vs " + std::to_string(vertex_deficit));
  }
  return s;
}

/// Convexity of the polygon a manifold point represents.
inline bool image_is_convex(const ManifoldPoint& m) {
  return detail::is_convex_ccw(place_vertices(m));
}

}  // namespace polyiso
