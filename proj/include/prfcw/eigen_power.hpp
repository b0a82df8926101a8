#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "prfcw/error.hpp"

namespace prfcw {

template <typename Scalar>
struct EigenPair {
  Scalar value;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> vector;
  int iterations;
};

/**
 * Largest eigenpair of a symmetric matrix by power iteration on A + sI, with
 * the Gershgorin shift s making every eigenvalue nonnegative. Stops once the
 * Rayleigh quotient moves by at most tol * max(1, |lambda|) and the residual
 * is below sqrt(tol) * max(1, |lambda|). Throws EigFailure after max_iter.
 */
template <typename Derived>
EigenPair<typename Derived::Scalar> largest_eigenpair(const Eigen::MatrixBase<Derived>& a,
                                                      typename Derived::Scalar tol = 1e-10,
                                                      int max_iter = 200000) {
  using Scalar = typename Derived::Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = a.rows();
  if (n == 0 || a.cols() != n) throw Error(ErrorCode::EigFailure, "matrix must be square and nonempty");

  Scalar shift = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar off = a.row(i).cwiseAbs().sum() - std::abs(a(i, i));
    shift = std::max(shift, off - a(i, i));
  }

  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = Scalar(1) + Scalar(0.1) * Scalar(i % 3);
  v.normalize();
  Vector w = a * v;
  Scalar theta = v.dot(w);
  for (int it = 1; it <= max_iter; ++it) {
    Vector next = w + shift * v;
    const Scalar norm = next.norm();
    if (!(norm > 0)) return {theta, v, it};
    v = next / norm;
    w.noalias() = a * v;
    const Scalar updated = v.dot(w);
    const Scalar scale = std::max(Scalar(1), std::abs(updated));
    const Scalar residual = (w - updated * v).norm();
    const bool settled = std::abs(updated - theta) <= tol * scale;
    theta = updated;
    if (settled && residual <= std::sqrt(tol) * scale) return {theta, v, it};
  }
  throw Error(ErrorCode::EigFailure, "power iteration did not converge");
}

}  // namespace prfcw
