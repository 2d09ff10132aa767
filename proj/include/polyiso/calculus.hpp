#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "polyiso/circulant.hpp"
#include "polyiso/constraints.hpp"
#include "polyiso/error.hpp"
#include "polyiso/manifold.hpp"
#include "polyiso/polygon.hpp"

namespace polyiso {

/// Finite differences are taken in extended precision: the functionals near z*
/// are differences of O(n) quantities, and long double keeps the cancellation
/// noise well below the truncation error at the default step.
using Extended = long double;
using ExtendedVector = VectorX<Extended>;
using ExtendedMatrix = Eigen::Matrix<Extended, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr double kDefaultStep = 1e-5;
inline constexpr double kMinStep = 1e-7;
inline constexpr double kRichardsonTol = 1e-3;

namespace detail {

template <class Scalar, class F>
VectorX<Scalar> central_gradient(F& f, const VectorX<Scalar>& z, Scalar h) {
  VectorX<Scalar> g(z.size());
  VectorX<Scalar> zp = z;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    zp[i] = z[i] + h;
    const Scalar fp = f(zp);
    zp[i] = z[i] - h;
    const Scalar fm = f(zp);
    zp[i] = z[i];
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

template <class Scalar, class F>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> central_hessian(F& f, const VectorX<Scalar>& z,
                                                                      Scalar h) {
  const Eigen::Index m = z.size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> hess(m, m);
  VectorX<Scalar> w = z;
  const Scalar f0 = f(z);
  for (Eigen::Index i = 0; i < m; ++i) {
    w[i] = z[i] + h;
    const Scalar fp = f(w);
    w[i] = z[i] - h;
    const Scalar fm = f(w);
    w[i] = z[i];
    hess(i, i) = (fp - 2 * f0 + fm) / (h * h);
    for (Eigen::Index j = i + 1; j < m; ++j) {
      w[i] = z[i] + h;
      w[j] = z[j] + h;
      const Scalar fpp = f(w);
      w[j] = z[j] - h;
      const Scalar fpm = f(w);
      w[i] = z[i] - h;
      const Scalar fmm = f(w);
      w[j] = z[j] + h;
      const Scalar fmp = f(w);
      w[i] = z[i];
      w[j] = z[j];
      hess(i, j) = hess(j, i) = (fpp - fpm - fmp + fmm) / (4 * h * h);
    }
  }
  return hess;
}

template <class Derived>
void check_richardson(const Eigen::MatrixBase<Derived>& fine, const Eigen::MatrixBase<Derived>& coarse,
                      double h) {
  using Scalar = typename Derived::Scalar;
  const Scalar scale = std::max<Scalar>(1, fine.cwiseAbs().maxCoeff());
  const Scalar gap = (fine - coarse).cwiseAbs().maxCoeff();
  if (!(gap <= kRichardsonTol * scale)) {
    throw Error(ErrorCode::StepTooSmall, "Richardson disagreement " +
                                             std::to_string(static_cast<double>(gap / scale)) +
                                             " at step " + std::to_string(h));
  }
}

inline void check_step(double h) {
  if (!(h >= kMinStep)) {
    throw Error(ErrorCode::StepTooSmall, "step " + std::to_string(h) + " below 1e-7");
  }
}

}  // namespace detail

/// Central-difference gradient at steps h and 2h, cross-checked and combined by
/// Richardson extrapolation.
template <class Scalar, class F>
VectorX<Scalar> grad_fd(F&& f, const VectorX<Scalar>& z, Scalar h = Scalar(kDefaultStep)) {
  detail::check_step(static_cast<double>(h));
  const VectorX<Scalar> fine = detail::central_gradient(f, z, h);
  const VectorX<Scalar> coarse = detail::central_gradient(f, z, Scalar(2) * h);
  detail::check_richardson(fine, coarse, static_cast<double>(h));
  return (Scalar(4) * fine - coarse) / Scalar(3);
}

/// Symmetric central-difference Hessian, with the same Richardson treatment.
template <class Scalar, class F>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> hessian_fd(F&& f, const VectorX<Scalar>& z,
                                                                 Scalar h = Scalar(kDefaultStep)) {
  detail::check_step(static_cast<double>(h));
  const auto fine = detail::central_hessian(f, z, h);
  const auto coarse = detail::central_hessian(f, z, Scalar(2) * h);
  detail::check_richardson(fine, coarse, static_cast<double>(h));
  return (Scalar(4) * fine - coarse) / Scalar(3);
}

enum class Functional { Deficit, Phi, SideVariance };

inline const char* to_string(Functional f) {
  switch (f) {
    case Functional::Deficit: return "delta";
    case Functional::Phi: return "phi";
    case Functional::SideVariance: return "side_variance";
  }
  return "unknown";
}

inline Extended evaluate_functional(Functional which, const ExtendedVector& z) {
  switch (which) {
    case Functional::Deficit: return deficit_of<Extended>(z);
    case Functional::Phi: return phi_of<Extended>(z);
    case Functional::SideVariance: {
      const Eigen::Index n = z.size() / 2;
      return evaluate<Extended>(z.head(n), z.tail(n)).side_variance;
    }
  }
  return 0;
}

inline ExtendedVector star_extended(int n) {
  return ManifoldPoint::star(n).stacked().cast<Extended>();
}

inline Vector gradient_at_star(Functional which, int n, double h = kDefaultStep) {
  auto f = [which](const ExtendedVector& z) { return evaluate_functional(which, z); };
  return grad_fd(f, star_extended(n), Extended(h)).cast<double>();
}

inline Matrix hessian_at_star(Functional which, int n, double h = kDefaultStep) {
  auto f = [which](const ExtendedVector& z) { return evaluate_functional(which, z); };
  return hessian_fd(f, star_extended(n), Extended(h)).cast<double>();
}

/// Outcome of comparing finite differences with a closed form.
struct DerivativeReport {
  std::string function;
  int n = 0;
  double gradient_max_abs_error = 0.0;
  double hessian_max_relative_error = 0.0;
  double step = kDefaultStep;
  Eigen::Index worst_row = 0;
  Eigen::Index worst_col = 0;
};

/// The closed form of D delta(z*): 2n tan(pi/n) on angle slots, 0 on radii.
inline Vector deficit_gradient_at_star(int n) {
  Vector g = Vector::Zero(2 * n);
  g.head(n).setConstant(2.0 * n * std::tan(std::numbers::pi / n));
  return g;
}

/// Checks D phi(z*) = 0 and D^2 phi(z*) = Phi. The Hessian error is the max
/// entrywise deviation scaled by the largest entry of Phi.
inline DerivativeReport verify_hessian_phi(int n, double h = kDefaultStep, double tol = 1e-5) {
  const Matrix closed = build_phi(n).matrix;
  const Matrix numeric = hessian_at_star(Functional::Phi, n, h);
  DerivativeReport report;
  report.function = "phi";
  report.n = n;
  report.step = h;
  report.gradient_max_abs_error = gradient_at_star(Functional::Phi, n, h).cwiseAbs().maxCoeff();
  const Matrix diff = (numeric - closed).cwiseAbs();
  report.hessian_max_relative_error =
      diff.maxCoeff(&report.worst_row, &report.worst_col) / closed.cwiseAbs().maxCoeff();
  if (report.hessian_max_relative_error > tol) {
    throw Error(ErrorCode::MismatchExceedsTolerance,
                "Hessian of phi differs at (" + std::to_string(report.worst_row) + ", " +
                    std::to_string(report.worst_col) + ") by relative " +
                    std::to_string(report.hessian_max_relative_error));
  }
  return report;
}

/// Checks D delta(z*) against its closed form, relative to 2n tan(pi/n).
inline DerivativeReport verify_gradient_delta(int n, double h = kDefaultStep, double tol = 1e-6) {
  const Vector closed = deficit_gradient_at_star(n);
  const Vector numeric = gradient_at_star(Functional::Deficit, n, h);
  DerivativeReport report;
  report.function = "delta";
  report.n = n;
  report.step = h;
  const Vector diff = (numeric - closed).cwiseAbs();
  report.gradient_max_abs_error = diff.maxCoeff(&report.worst_row);
  const double relative = report.gradient_max_abs_error / closed.cwiseAbs().maxCoeff();
  if (relative > tol) {
    throw Error(ErrorCode::MismatchExceedsTolerance,
                "gradient of delta differs at " + std::to_string(report.worst_row) +
                    " by relative " + std::to_string(relative));
  }
  return report;
}

/// Second-order data of delta at z* restricted to the tangent space.
struct SigmaEstimate {
  int n = 0;
  double step = kDefaultStep;
  double sigma = 0.0;       // smallest eigenvalue of the restricted form
  Matrix hessian;           // ambient D^2 delta(z*), 2n x 2n
  TangentBasis basis;       // columns span the tangent space at z*
  Matrix restricted;        // basis^T hessian basis

  /// <D^2 delta(z*) w, w> for an ambient vector w.
  double form(const Vector& w) const { return w.dot(hessian * w); }
};

inline SigmaEstimate sigma_estimate(int n, double h = kDefaultStep) {
  SigmaEstimate est;
  est.n = n;
  est.step = h;
  est.hessian = hessian_at_star(Functional::Deficit, n, h);
  est.basis = tangent_basis_at_star(n);
  est.restricted = est.basis.vectors.transpose() * est.hessian * est.basis.vectors;
  est.restricted = 0.5 * (est.restricted + est.restricted.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(est.restricted, Eigen::EigenvaluesOnly);
  est.sigma = eig.eigenvalues().minCoeff();
  if (!(est.sigma > 0.0)) {
    throw Error(ErrorCode::NonpositiveSigma,
                "smallest tangent eigenvalue of D^2 delta(z*) is " + std::to_string(est.sigma));
  }
  return est;
}

/// Third-order Taylor remainder |f(z) - 1/2 <H d, d>| / |d|^3 with d = z - z*,
/// maximized over random retracted tangent curves at parameter t.
inline double fit_taylor_constant(Functional which, const Matrix& hessian, int n, double t,
                                  int directions, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const TangentBasis basis = tangent_basis_at_star(n);
  const Vector star = ManifoldPoint::star(n).stacked();
  double worst = 0.0;
  for (int k = 0; k < directions; ++k) {
    const Vector w = random_tangent_direction(basis, rng);
    const ManifoldPoint m = retract(star + t * w);
    const Vector d = m.stacked() - star;
    const double value =
        static_cast<double>(evaluate_functional(which, m.stacked().cast<Extended>()));
    const double remainder = std::abs(value - 0.5 * d.dot(hessian * d));
    worst = std::max(worst, remainder / std::pow(d.norm(), 3));
  }
  return worst;
}

}  // namespace polyiso
