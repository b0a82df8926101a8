#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

namespace prfcw {

template <typename Scalar>
struct QuadratureRule {
  Eigen::Array<Scalar, Eigen::Dynamic, 1> nodes;
  Eigen::Array<Scalar, Eigen::Dynamic, 1> weights;
};

/**
 * Golub-Welsch: nodes are the eigenvalues of the symmetric Jacobi matrix
 * with off-diagonal `beta`, weights are mu0 * (first eigenvector component)^2.
 */
template <typename Scalar>
QuadratureRule<Scalar> golub_welsch(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& beta, Scalar mu0) {
  const Eigen::Index n = beta.size() + 1;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> diag =
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>
      solver;
  solver.computeFromTridiagonal(diag, beta, Eigen::ComputeEigenvectors);
  QuadratureRule<Scalar> rule;
  rule.nodes = solver.eigenvalues().array();
  rule.weights = mu0 * solver.eigenvectors().row(0).transpose().array().square();
  return rule;
}

// Gauss-Legendre on [-1, 1].
template <typename Scalar = double>
QuadratureRule<Scalar> gauss_legendre(Eigen::Index n) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> beta(n - 1);
  for (Eigen::Index i = 1; i < n; ++i) {
    const Scalar k = static_cast<Scalar>(i);
    beta(i - 1) = k / std::sqrt(Scalar(4) * k * k - Scalar(1));
  }
  return golub_welsch<Scalar>(beta, Scalar(2));
}

// Gauss-Hermite for the weight exp(-t^2) on the real line.
template <typename Scalar = double>
QuadratureRule<Scalar> gauss_hermite(Eigen::Index n) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> beta(n - 1);
  for (Eigen::Index i = 1; i < n; ++i) beta(i - 1) = std::sqrt(Scalar(i) / Scalar(2));
  return golub_welsch<Scalar>(beta, std::sqrt(std::numbers::pi_v<Scalar>));
}

}  // namespace prfcw
