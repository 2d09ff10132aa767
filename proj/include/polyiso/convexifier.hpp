#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "polyiso/error.hpp"
#include "polyiso/polygon.hpp"

namespace polyiso {

/// A maximal chain of vertices strictly inside the convex hull, closed off by
/// the hull edge (lid) from lid_start to lid_end.
struct Pocket {
  std::size_t lid_start = 0;
  std::size_t lid_end = 0;
  std::vector<std::size_t> vertices;
};

struct FlipStep {
  Pocket pocket;
  double perimeter = 0.0;
  double area = 0.0;
  double deficit = 0.0;
};

/// polygons[0] is the input; polygons[k] is the result of steps[k - 1].
struct FlipTrace {
  std::vector<VertexPolygon> polygons;
  std::vector<FlipStep> steps;

  std::size_t flips() const { return steps.size(); }
};

namespace detail {

inline double orient(Point a, Point b, Point c) { return cross(b - a, c - a); }

inline bool on_segment(Point a, Point b, Point p, double eps) {
  return std::abs(orient(a, b, p)) <= eps && std::min(a.x, b.x) - eps <= p.x &&
         p.x <= std::max(a.x, b.x) + eps && std::min(a.y, b.y) - eps <= p.y &&
         p.y <= std::max(a.y, b.y) + eps;
}

inline bool segments_touch(Point a, Point b, Point c, Point d, double eps) {
  const double o1 = orient(a, b, c), o2 = orient(a, b, d);
  const double o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (((o1 > eps && o2 < -eps) || (o1 < -eps && o2 > eps)) &&
      ((o3 > eps && o4 < -eps) || (o3 < -eps && o4 > eps))) {
    return true;
  }
  return on_segment(a, b, c, eps) || on_segment(a, b, d, eps) || on_segment(c, d, a, eps) ||
         on_segment(c, d, b, eps);
}

/// Indices of the strict convex hull (collinear points dropped), CCW.
inline std::vector<std::size_t> hull_indices(const std::vector<Point>& pts, double eps) {
  std::vector<std::size_t> idx(pts.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return pts[a].x < pts[b].x || (pts[a].x == pts[b].x && pts[a].y < pts[b].y);
  });
  std::vector<std::size_t> hull(2 * idx.size());
  std::size_t k = 0;
  for (std::size_t i : idx) {
    while (k >= 2 && orient(pts[hull[k - 2]], pts[hull[k - 1]], pts[i]) <= eps) --k;
    hull[k++] = i;
  }
  for (std::size_t j = idx.size() - 1, lower = k + 1; j-- > 0;) {
    const std::size_t i = idx[j];
    while (k >= lower && orient(pts[hull[k - 2]], pts[hull[k - 1]], pts[i]) <= eps) --k;
    hull[k++] = i;
  }
  hull.resize(k - 1);
  return hull;
}

inline double scale_eps(const std::vector<Point>& pts) {
  const double d = diameter_bound(pts);
  return 1e-12 * d * d;
}

}  // namespace detail

/// True when no two non-adjacent edges meet and adjacent edges share only
/// their common vertex.
inline bool is_simple(const VertexPolygon& poly) {
  const auto& v = poly.vertices();
  const std::size_t n = v.size();
  const double eps = detail::scale_eps(v);
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = v[i], b = v[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const Point c = v[j], d = v[(j + 1) % n];
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) {
        // Folding back onto the neighbouring edge.
        const Point shared = j == i + 1 ? b : a;
        const Point other = j == i + 1 ? d : c;
        const Point mine = j == i + 1 ? a : b;
        if (std::abs(detail::orient(mine, shared, other)) <= eps &&
            dot(mine - shared, other - shared) > 0.0) {
          return false;
        }
        continue;
      }
      if (detail::segments_touch(a, b, c, d, eps)) return false;
    }
  }
  return true;
}

/// Pockets ordered by lid start index.
inline std::vector<Pocket> pockets(const VertexPolygon& poly) {
  if (!is_simple(poly)) throw Error(ErrorCode::NotSimple, "polygon self-intersects");
  const auto& v = poly.vertices();
  const std::size_t n = v.size();
  const double eps = detail::scale_eps(v);
  std::vector<std::size_t> hull = detail::hull_indices(v, eps);
  std::sort(hull.begin(), hull.end());

  std::vector<Pocket> out;
  for (std::size_t h = 0; h < hull.size(); ++h) {
    const std::size_t a = hull[h];
    const std::size_t b = hull[(h + 1) % hull.size()];
    const std::size_t gap = (b + n - a) % n;
    if (gap <= 1) continue;
    Pocket p{a, b, {}};
    bool inside = false;
    for (std::size_t k = 1; k < gap; ++k) {
      const std::size_t i = (a + k) % n;
      p.vertices.push_back(i);
      if (detail::orient(v[a], v[b], v[i]) > eps) inside = true;
    }
    if (inside) out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(),
            [](const Pocket& x, const Pocket& y) { return x.lid_start < y.lid_start; });
  return out;
}

/// Reflects the pocket's vertices across its lid line.
inline VertexPolygon flip(const VertexPolygon& poly, const Pocket& pocket) {
  std::vector<Point> pts = poly.vertices();
  const Point a = pts[pocket.lid_start];
  const Point d = pts[pocket.lid_end] - a;
  const double d2 = dot(d, d);
  for (std::size_t i : pocket.vertices) {
    const Point p = pts[i];
    const Point foot = a + (dot(p - a, d) / d2) * d;
    pts[i] = 2.0 * foot - p;
  }
  const double before = poly.area();
  VertexPolygon out = from_vertices(std::move(pts));
  if (!is_simple(out) || !(out.area() > before)) {
    throw Error(ErrorCode::ReflectionCreatesSelfIntersection,
                "flipping the pocket at lid " + std::to_string(pocket.lid_start) + "-" +
                    std::to_string(pocket.lid_end) + " did not give a larger simple polygon");
  }
  return out;
}

inline FlipStep describe(const VertexPolygon& poly, Pocket pocket) {
  FlipStep s;
  s.pocket = std::move(pocket);
  s.perimeter = poly.perimeter();
  s.area = poly.area();
  s.deficit = s.perimeter * s.perimeter -
              isoperimetric_factor<double>(static_cast<Eigen::Index>(poly.size())) * s.area;
  return s;
}

/// Flips the lowest-index pocket until none remain.
inline FlipTrace convexify(const VertexPolygon& poly, std::size_t max_flips = 10000) {
  FlipTrace trace;
  trace.polygons.push_back(poly);
  for (;;) {
    const std::vector<Pocket> ps = pockets(trace.polygons.back());
    if (ps.empty()) return trace;
    if (trace.flips() >= max_flips) {
      throw Error(ErrorCode::FlipBudgetExhausted,
                  "still not convex after " + std::to_string(max_flips) + " flips");
    }
    VertexPolygon next = flip(trace.polygons.back(), ps.front());
    trace.steps.push_back(describe(next, ps.front()));
    trace.polygons.push_back(std::move(next));
  }
}

/// A random simple polygon: n points at sorted uniform angles with radii
/// uniform in [min_radius, 1]. Angle sets with a gap of pi or more are redrawn,
/// so the polygon is star-shaped about the origin; typically it is not convex.
inline VertexPolygon random_star_polygon(std::size_t n, std::mt19937_64& rng, double min_radius = 0.2) {
  const double two_pi = 2.0 * std::numbers::pi;
  std::uniform_real_distribution<double> angle(0.0, two_pi);
  std::uniform_real_distribution<double> radius(min_radius, 1.0);
  std::vector<double> theta(n);
  for (;;) {
    for (double& t : theta) t = angle(rng);
    std::sort(theta.begin(), theta.end());
    double widest = theta.front() + two_pi - theta.back();
    for (std::size_t i = 1; i < n; ++i) widest = std::max(widest, theta[i] - theta[i - 1]);
    if (widest < std::numbers::pi) break;
  }
  std::vector<Point> pts;
  pts.reserve(n);
  for (double t : theta) {
    const double r = radius(rng);
    pts.push_back({r * std::cos(t), r * std::sin(t)});
  }
  return from_vertices(std::move(pts));
}

/// A random simple polygon on n uniform points in the unit square, untangled by
/// 2-opt moves (reverse the chain between two crossing edges until none cross).
/// Unlike random_star_polygon this produces deep and nested pockets.
inline VertexPolygon random_simple_polygon(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coord(0.0, 1.0);
  for (;;) {
    std::vector<Point> pts(n);
    for (Point& p : pts) p = {coord(rng), coord(rng)};
    bool crossed = true;
    while (crossed) {
      crossed = false;
      for (std::size_t i = 0; i + 2 < n && !crossed; ++i) {
        for (std::size_t j = i + 2; j < n && !crossed; ++j) {
          if (i == 0 && j == n - 1) continue;
          if (detail::segments_touch(pts[i], pts[i + 1], pts[j], pts[(j + 1) % n], 0.0)) {
            std::reverse(pts.begin() + static_cast<std::ptrdiff_t>(i + 1),
                         pts.begin() + static_cast<std::ptrdiff_t>(j + 1));
            crossed = true;
          }
        }
      }
    }
    try {
      VertexPolygon poly = from_vertices(std::move(pts));
      if (is_simple(poly)) return poly;
    } catch (const Error&) {
    }
  }
}

}  // namespace polyiso
