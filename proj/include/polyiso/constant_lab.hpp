#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "polyiso/calculus.hpp"
#include "polyiso/circulant.hpp"
#include "polyiso/error.hpp"
#include "polyiso/manifold.hpp"
#include "polyiso/polygon.hpp"

namespace polyiso {

/// Relative slack tolerance factor: tol = factor * max(1, |lhs|, |rhs|).
inline constexpr double kInequalityTol = 1e-9;
/// Points with smaller deficit are not used for direct ratio evaluation.
inline constexpr double kDeficitFloor = 1e-14;
/// Max-norm radius around z* inside which the Rayleigh limit replaces direct
/// ratio evaluation.
inline constexpr double kNearRadius = 1e-2;

// ---------------------------------------------------------------------------
// Inequality verification

struct InequalityRecord {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  bool applicable = true;
  bool pass = true;
};

struct InequalityReport {
  int n = 0;
  bool convex = false;
  PolygonSummary summary;
  std::vector<InequalityRecord> records;
  /// |slack(fin) - slack(shilleto)|; zero up to rounding by the side-variance identity.
  double equivalence_gap = 0.0;

  bool pass() const {
    return std::all_of(records.begin(), records.end(), [](const auto& r) { return r.pass; });
  }
  const InequalityRecord& record(const std::string& name) const {
    for (const auto& r : records) {
      if (r.name == name) return r;
    }
    throw Error(ErrorCode::InternalInconsistency, "no record named " + name);
  }
};

/// Constants for the inequalities whose constant is not explicit.
struct InequalityConstants {
  std::optional<double> main_theorem;   // c_n
  std::optional<double> side_variance;  // empirical constant of sigma_s^2 <= c delta
};

namespace detail {

inline double tolerance(double factor, double lhs, double rhs) {
  return factor * std::max({1.0, std::abs(lhs), std::abs(rhs)});
}

inline InequalityRecord inequality(std::string name, double lhs, double rhs, bool applicable,
                                   double factor) {
  InequalityRecord rec{std::move(name), lhs, rhs, rhs - lhs, applicable, true};
  if (applicable) rec.pass = rec.slack >= -tolerance(factor, lhs, rhs);
  return rec;
}

}  // namespace detail

/// Evaluates every inequality and identity on precomputed functionals.
/// Convexity-dependent records are marked inapplicable (and pass) otherwise.
inline InequalityReport verify(const PolygonSummary& s, int n, bool convex,
                               const InequalityConstants& constants = {},
                               double tol_factor = kInequalityTol) {
  const double pi = std::numbers::pi;
  const double nd = n;
  const double sin_pi_n = std::sin(pi / nd);
  const double radius_term = 8.0 * nd * nd * sin_pi_n * sin_pi_n * s.radius_variance;
  const double theorem_lhs = s.radius_variance + s.area * s.angle_variance;

  InequalityReport report;
  report.n = n;
  report.convex = convex;
  report.summary = s;
  auto& recs = report.records;

  recs.push_back(detail::inequality("nonnegativity", 0.0, s.deficit, convex, tol_factor));

  const double shilleto_rhs =
      nd * s.side_square_sum - isoperimetric_factor<double>(n) * s.area;
  recs.push_back(detail::inequality("shilleto", radius_term, shilleto_rhs, true, tol_factor));

  const double fin_rhs = s.deficit + nd * nd * s.side_variance;
  InequalityRecord fin = detail::inequality("fin", radius_term, fin_rhs, true, tol_factor);
  report.equivalence_gap = std::abs(fin.slack - recs.back().slack);
  if (report.equivalence_gap > detail::tolerance(tol_factor, shilleto_rhs, fin_rhs)) fin.pass = false;
  recs.push_back(fin);

  if (constants.side_variance) {
    recs.push_back(detail::inequality("side_variance", s.side_variance,
                                      *constants.side_variance * s.deficit, convex, tol_factor));
  } else {
    recs.push_back({"side_variance", s.side_variance, 0.0, 0.0, false, true});
  }

  // The theorem only needs the central angles to sum to 2pi, which every
  // manifold point satisfies.
  if (constants.main_theorem) {
    recs.push_back(detail::inequality("main_theorem", theorem_lhs,
                                      *constants.main_theorem * s.deficit, true, tol_factor));
  } else {
    recs.push_back({"main_theorem", theorem_lhs, 0.0, 0.0, false, true});
  }

  if (constants.main_theorem && constants.side_variance) {
    const double c = *constants.main_theorem + *constants.side_variance;
    recs.push_back(detail::inequality("corollary", s.side_variance + theorem_lhs, c * s.deficit,
                                      convex, tol_factor));
  } else {
    recs.push_back({"corollary", s.side_variance + theorem_lhs, 0.0, 0.0, false, true});
  }

  const double identity_lhs = nd * nd * s.side_variance;
  const double identity_rhs = nd * s.side_square_sum - s.perimeter * s.perimeter;
  InequalityRecord identity{"variance_identity", identity_lhs, identity_rhs,
                            identity_rhs - identity_lhs, true, true};
  identity.pass = std::abs(identity.slack) <= detail::tolerance(tol_factor, identity_lhs, identity_rhs);
  recs.push_back(identity);
  return report;
}

inline InequalityReport verify(const ManifoldPoint& m, const InequalityConstants& constants = {},
                               double tol_factor = kInequalityTol) {
  try {
    require_on_manifold(m);
  } catch (const Error& e) {
    throw Error(ErrorCode::NotOnManifold, e.what());
  }
  return verify(summary(m), static_cast<int>(m.n()), image_is_convex(m), constants, tol_factor);
}

inline InequalityReport verify(const VertexPolygon& poly, const InequalityConstants& constants = {},
                               double tol_factor = kInequalityTol) {
  return verify(summary(poly), static_cast<int>(poly.size()), poly.convex(), constants, tol_factor);
}

// ---------------------------------------------------------------------------
// Ratio and the sharp constant

/// (sigma_r^2 + |P| sigma_a^2) / delta from the raw (x; r) formulas.
template <class Scalar>
Scalar ratio_of(const VectorX<Scalar>& z) {
  const Eigen::Index n = z.size() / 2;
  const Functionals<Scalar> f = evaluate<Scalar>(z.head(n), z.tail(n));
  return (f.radius_variance + f.area * f.angle_variance) / f.deficit;
}

/// Ratio at a manifold point, or nullopt where it is not evaluated directly
/// (deficit below the noise floor).
inline std::optional<double> ratio(const ManifoldPoint& m) {
  const ExtendedVector z = m.stacked().cast<Extended>();
  const Extended d = deficit_of<Extended>(z);
  if (!(d >= kDeficitFloor)) return std::nullopt;
  return static_cast<double>(ratio_of<Extended>(z));
}

inline double distance_to_star(const ManifoldPoint& m) {
  return (m.stacked() - ManifoldPoint::star(static_cast<int>(m.n())).stacked()).cwiseAbs().maxCoeff();
}

/// Maximum over unit tangent w at z* of <A w, w> / (n^2 <D^2 delta(z*) w, w>)
/// for a symmetric 2n x 2n form A; returns the value and the maximizing w.
struct RayleighBound {
  double value = 0.0;
  Vector direction;
};

inline RayleighBound tangent_rayleigh(const Matrix& form, const SigmaEstimate& sigma) {
  const Matrix& t = sigma.basis.vectors;
  Matrix a = t.transpose() * form * t;
  a = 0.5 * (a + a.transpose()).eval();
  const Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> eig(a, sigma.restricted);
  Eigen::Index top = 0;
  eig.eigenvalues().maxCoeff(&top);
  const double n = sigma.n;
  return {eig.eigenvalues()[top] / (n * n), (t * eig.eigenvectors().col(top)).normalized()};
}

struct EstimateOptions {
  int starts = 16;
  int ascent_iterations = 400;
  int sample_attempts = 1000;
  double max_step = 0.1;
  double fd_step = 1e-6;
  /// Added to every squared angle variable so lifted points keep x_i > 0.
  double angle_floor = 1e-12;
  bool parallel = true;
  SamplerOptions sampler;
};

/// Numerical estimate of the smallest c_n with sigma_r^2 + |P| sigma_a^2 <= c_n delta on M.
struct ConstantEstimate {
  int n = 0;
  std::uint64_t seed = 0;
  double c_hat = 0.0;
  std::string winning_phase;  // "global", "local" or "refined"
  ManifoldPoint argmax;       // z* when the local phase wins
  double global_best = 0.0;
  double refined_best = 0.0;
  double rayleigh_bound = 0.0;
  Vector rayleigh_direction;
  double sigma = 0.0;
  int sample_count = 0;
  int skipped_near_star = 0;
  int optimizer_iterations = 0;
  bool budget_exhausted = false;
};

namespace detail {

/// Smooth surjection from R^{2n} onto M: x_i proportional to y_i^2 (plus a
/// floor) and rescaled to sum 2pi, r projected onto the linear radius
/// constraints. The face x_i = 0 is reached at y_i = 0, where the map is smooth.
inline ManifoldPoint lift(const Vector& u, double angle_floor) {
  const Eigen::Index n = u.size() / 2;
  Vector z(2 * n);
  z.head(n) = u.head(n).array().square() + angle_floor;
  z.tail(n) = u.tail(n);
  return retract(z);
}

inline Vector unlift(const ManifoldPoint& m) {
  Vector u(2 * m.n());
  u << m.x.cwiseSqrt(), m.r;
  return u;
}

struct AscentResult {
  ManifoldPoint point;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// BFGS ascent of the ratio composed with lift(). Finite-difference gradients
/// of the composition are gradients projected onto the tangent space of M.
/// Iterates never enter the near-z* ball, where the Rayleigh limit applies.
inline AscentResult ascend_ratio(const ManifoldPoint& start, double start_value,
                                 const EstimateOptions& opts) {
  auto objective = [&opts](const Vector& u) -> double {
    const ManifoldPoint m = lift(u, opts.angle_floor);
    if (distance_to_star(m) < kNearRadius) return -std::numeric_limits<double>::infinity();
    const auto value = ratio(m);
    return value ? *value : -std::numeric_limits<double>::infinity();
  };
  auto safe_objective = [&objective](const Vector& u) {
    try {
      return objective(u);
    } catch (const Error&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  auto gradient = [&](const Vector& u, Vector& g) {
    try {
      g = grad_fd(objective, u, opts.fd_step);
      return g.allFinite();
    } catch (const Error&) {
      return false;
    }
  };

  AscentResult res{start, start_value, 0, false};
  Vector u = unlift(start);
  double value = safe_objective(u);
  if (!std::isfinite(value)) return res;
  Vector g;
  if (!gradient(u, g)) {
    res.converged = true;
    return res;
  }
  Matrix inv_hessian = Matrix::Identity(u.size(), u.size());
  while (res.iterations < opts.ascent_iterations) {
    ++res.iterations;
    if (g.norm() <= 1e-9 * std::max(1.0, std::abs(value))) {
      res.converged = true;
      break;
    }
    Vector dir = inv_hessian * g;
    if (g.dot(dir) <= 0.0) {
      inv_hessian.setIdentity();
      dir = g;
    }
    if (dir.norm() > opts.max_step) dir *= opts.max_step / dir.norm();
    double alpha = 1.0;
    Vector next;
    double next_value = -std::numeric_limits<double>::infinity();
    while (alpha > 1e-12) {
      next = u + alpha * dir;
      next_value = safe_objective(next);
      if (next_value >= value + 1e-4 * alpha * g.dot(dir)) break;
      alpha *= 0.5;
    }
    if (!(alpha > 1e-12) || !(next_value > value)) {
      res.converged = true;
      break;
    }
    Vector next_g;
    if (!gradient(next, next_g)) {
      u = next;
      value = next_value;
      res.converged = true;
      break;
    }
    // Curvature pair for minimizing -ratio.
    const Vector s = next - u;
    const Vector y = g - next_g;
    const double sy = s.dot(y);
    if (sy > 1e-14 * s.norm() * y.norm()) {
      const Matrix eye = Matrix::Identity(u.size(), u.size());
      const Matrix left = eye - (s * y.transpose()) / sy;
      inv_hessian = left * inv_hessian * left.transpose() + (s * s.transpose()) / sy;
    }
    const bool stalled = next_value - value <= 1e-14 * std::abs(value);
    u = std::move(next);
    value = next_value;
    g = std::move(next_g);
    if (stalled) {
      res.converged = true;
      break;
    }
  }
  res.point = lift(u, opts.angle_floor);
  res.value = value;
  return res;
}

}  // namespace detail

/// Two-phase estimate of c_n. Global phase: ratio over `budget` sampled points
/// outside the near-z* ball. Local phase: the tangent Rayleigh maximum, which
/// is the limit of the ratio along curves into z*. The best global points seed
/// BFGS ascents in lifted coordinates; c_hat is the largest value found.
inline ConstantEstimate estimate_cn(int n, int budget, std::uint64_t seed,
                                    const EstimateOptions& opts = {}) {
  if (n < 3) throw Error(ErrorCode::DimensionMismatch, "need n >= 3");
  ConstantEstimate est;
  est.n = n;
  est.seed = seed;

  const SigmaEstimate sigma = sigma_estimate(n);
  est.sigma = sigma.sigma;
  const RayleighBound local = tangent_rayleigh(build_phi(n).matrix, sigma);
  est.rayleigh_bound = local.value;
  est.rayleigh_direction = local.direction;

  struct Candidate {
    double value;
    ManifoldPoint point;
  };
  std::vector<Candidate> candidates;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < budget; ++i) {
    ManifoldSample s;
    try {
      s = sample(n, rng, opts.sample_attempts, opts.sampler);
    } catch (const Error&) {
      est.budget_exhausted = true;
      break;
    }
    ++est.sample_count;
    if (distance_to_star(s.point) < kNearRadius) {
      ++est.skipped_near_star;
      continue;
    }
    if (const auto value = ratio(s.point)) candidates.push_back({*value, std::move(s.point)});
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) { return a.value > b.value; });
  if (!candidates.empty()) est.global_best = candidates.front().value;

  const std::size_t starts = std::min<std::size_t>(static_cast<std::size_t>(opts.starts), candidates.size());
  std::vector<detail::AscentResult> refined(starts);
  if (opts.parallel) {
    std::vector<std::future<detail::AscentResult>> tasks;
    for (std::size_t k = 0; k < starts; ++k) {
      tasks.push_back(std::async(std::launch::async, detail::ascend_ratio, candidates[k].point,
                                 candidates[k].value, std::cref(opts)));
    }
    for (std::size_t k = 0; k < starts; ++k) refined[k] = tasks[k].get();
  } else {
    for (std::size_t k = 0; k < starts; ++k) {
      refined[k] = detail::ascend_ratio(candidates[k].point, candidates[k].value, opts);
    }
  }

  std::optional<std::size_t> best_refined;
  for (std::size_t k = 0; k < starts; ++k) {
    est.optimizer_iterations += refined[k].iterations;
    if (!refined[k].converged) est.budget_exhausted = true;
    if (!best_refined || refined[k].value > refined[*best_refined].value) best_refined = k;
  }
  if (best_refined) est.refined_best = refined[*best_refined].value;

  est.c_hat = est.rayleigh_bound;
  est.winning_phase = "local";
  est.argmax = ManifoldPoint::star(n);
  if (!candidates.empty() && est.global_best > est.c_hat) {
    est.c_hat = est.global_best;
    est.winning_phase = "global";
    est.argmax = candidates.front().point;
  }
  if (best_refined && est.refined_best > est.c_hat) {
    est.c_hat = est.refined_best;
    est.winning_phase = "refined";
    est.argmax = refined[*best_refined].point;
  }
  return est;
}

struct HoldoutResult {
  int samples = 0;
  int violations = 0;
  double worst_ratio = 0.0;
};

/// Re-checks sigma_r^2 + |P| sigma_a^2 <= c delta on fresh convex samples.
inline HoldoutResult holdout_check(int n, double c, int count, std::uint64_t seed,
                                   const SamplerOptions& sampler = {}) {
  HoldoutResult res;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < count; ++i) {
    const ManifoldSample s = sample_convex(n, rng, 100000, sampler);
    const PolygonSummary f = summary(s.point);
    const double lhs = f.radius_variance + f.area * f.angle_variance;
    ++res.samples;
    if (f.deficit > 0.0) res.worst_ratio = std::max(res.worst_ratio, lhs / f.deficit);
    if (lhs > c * f.deficit + detail::tolerance(kInequalityTol, lhs, c * f.deficit)) ++res.violations;
  }
  return res;
}

/// Empirical constant for sigma_s^2 <= c delta on convex polygons: sampled
/// supremum over convex points joined with the tangent Rayleigh limit at z*.
inline double estimate_side_variance_constant(int n, int budget, std::uint64_t seed,
                                              const SamplerOptions& sampler = {}) {
  const SigmaEstimate sigma = sigma_estimate(n);
  const double nd = n;
  const Matrix side_hessian = hessian_at_star(Functional::SideVariance, n);
  double best = nd * nd * tangent_rayleigh(side_hessian, sigma).value;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < budget; ++i) {
    const ManifoldSample s = sample(n, rng, 1000, sampler);
    if (!s.convex || distance_to_star(s.point) < kNearRadius) continue;
    const PolygonSummary f = evaluate<double>(s.point.x, s.point.r);
    if (f.deficit >= kDeficitFloor) best = std::max(best, f.side_variance / f.deficit);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Sharpness of the exponent

struct SharpnessResult {
  int n = 0;
  std::vector<double> t;
  std::vector<double> ratios;
  double limit = 0.0;     // linear extrapolation to t = 0 from the two smallest t
  double rayleigh = 0.0;  // <Phi w, w> / (n^2 <D^2 delta(z*) w, w>)
};

/// Ratio along the retracted curve t -> retract(z* + t w) for decreasing t.
inline SharpnessResult sharpness_probe(const SigmaEstimate& sigma, const Vector& direction,
                                       const std::vector<double>& t_sequence) {
  const int n = sigma.n;
  if (direction.size() != 2 * n) {
    throw Error(ErrorCode::DimensionMismatch, "direction must have length 2n");
  }
  if (t_sequence.size() < 2) {
    throw Error(ErrorCode::DimensionMismatch, "need at least two values of t");
  }
  const Vector w = direction.normalized();
  const Matrix jac = constraint_jacobian(ManifoldPoint::star(n));
  if ((jac * w).cwiseAbs().maxCoeff() > 1e-8) {
    throw Error(ErrorCode::NotTangent, "direction violates the linearized constraints");
  }
  const double phi_form = quadratic_form(build_phi(n), w);
  if (phi_form <= 1e-12) {
    throw Error(ErrorCode::DegenerateDirection, "<Phi w, w> vanishes");
  }

  SharpnessResult res;
  res.n = n;
  res.rayleigh = phi_form / (static_cast<double>(n) * n * sigma.form(w));
  const Vector star = ManifoldPoint::star(n).stacked();
  for (double t : t_sequence) {
    const ManifoldPoint m = retract(star + t * w);
    const ExtendedVector z = m.stacked().cast<Extended>();
    res.t.push_back(t);
    res.ratios.push_back(static_cast<double>(ratio_of<Extended>(z)));
  }
  // Order by t so the fit uses the two smallest parameters.
  std::vector<std::size_t> order(res.t.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return res.t[a] < res.t[b]; });
  const double t0 = res.t[order[0]], t1 = res.t[order[1]];
  const double r0 = res.ratios[order[0]], r1 = res.ratios[order[1]];
  res.limit = (t1 * r0 - t0 * r1) / (t1 - t0);
  if (!(res.limit > 0.0) || !std::isfinite(res.limit)) {
    throw Error(ErrorCode::DegenerateDirection, "ratio limit is not positive and finite");
  }
  return res;
}

// ---------------------------------------------------------------------------
// Scaling counterexample

struct ScalingReport {
  double alpha = 1.0;
  PolygonSummary original;
  PolygonSummary dilated;
  double deficit_error = 0.0;          // relative error of delta(P_a) = a^2 delta(P)
  double angle_variance_error = 0.0;   // relative error of sigma_a^2(P_a) = sigma_a^2(P)
  double radius_variance_error = 0.0;  // relative error of sigma_r^2(P_a) = a^2 sigma_r^2(P)
  double area_error = 0.0;             // relative error of |P_a| = a^2 |P|
  double ratio_growth = 1.0;           // (sigma_a^2/delta)(P_a) / (sigma_a^2/delta)(P)

  bool pass(double tol = 1e-12) const {
    return deficit_error <= tol && angle_variance_error <= tol && radius_variance_error <= tol &&
           area_error <= tol;
  }
};

/// Dilates the radii about the vertex barycenter by alpha.
inline VertexPolygon dilate(const VertexPolygon& poly, double alpha) {
  const Point o = poly.barycenter();
  std::vector<Point> pts;
  pts.reserve(poly.size());
  for (const Point& p : poly.vertices()) pts.push_back(alpha * (p - o));
  return from_vertices(std::move(pts));
}

inline ScalingReport scaling_check(const VertexPolygon& poly, double alpha) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::DimensionMismatch, "alpha must be positive");
  // Relative error, except for quantities vanishing against their natural
  // magnitude (e.g. sigma_r^2 of an inscribed polygon), which are compared
  // against 1e-6 of that magnitude instead.
  auto relative = [](double got, double want, double magnitude) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-6 * magnitude);
  };
  ScalingReport rep;
  rep.alpha = alpha;
  rep.original = summary(dilate(poly, 1.0));
  rep.dilated = summary(dilate(poly, alpha));
  const double a2 = alpha * alpha;
  const double length2 = a2 * rep.original.perimeter * rep.original.perimeter;
  rep.deficit_error = relative(rep.dilated.deficit, a2 * rep.original.deficit, length2);
  rep.angle_variance_error =
      relative(rep.dilated.angle_variance, rep.original.angle_variance, 1.0);
  rep.radius_variance_error =
      relative(rep.dilated.radius_variance, a2 * rep.original.radius_variance, length2);
  rep.area_error = relative(rep.dilated.area, a2 * rep.original.area, length2);
  rep.ratio_growth = (rep.dilated.angle_variance / rep.dilated.deficit) /
                     (rep.original.angle_variance / rep.original.deficit);
  return rep;
}

inline ScalingReport scaling_check(const ManifoldPoint& m, double alpha) {
  return scaling_check(to_vertices(m), alpha);
}

}  // namespace polyiso
