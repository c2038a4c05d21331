#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

#include "harvex/errors.hpp"

namespace harvex {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace linalg {

inline bool is_symmetric(const Matrix& m, double tol) {
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

// Symmetric square root of a PSD matrix. Eigenvalues below zero (rounding
// noise on PSD inputs) are clipped to zero; a genuinely indefinite input is
// the caller's validation problem.
inline Matrix spd_sqrt(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  Vector d = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Matrix root = eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (root + root.transpose());
}

// Inverse symmetric square root; requires strictly positive spectrum.
inline Matrix spd_inv_sqrt(const Matrix& s, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  if (eig.eigenvalues().minCoeff() <= floor) {
    throw NumericError(ErrorCode::SingularIterate, "",
                       "matrix has eigenvalue below positivity floor in inverse square root");
  }
  Vector d = eig.eigenvalues().cwiseSqrt().cwiseInverse();
  Matrix inv_root = eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (inv_root + inv_root.transpose());
}

inline double min_eigenvalue(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

// Dense matrix exponential (scaling-and-squaring with Pade approximants via
// Eigen's MatrixFunctions module; backward error well below the 1e-12 budget
// the trajectory contract asks for).
inline Matrix expm(const Matrix& m) { return m.exp(); }

// J(T) = integral_0^T e^{tM} dt.  Uses (e^{TM} - I) M^{-1} when M is
// comfortably invertible, otherwise the augmented block
// exp(T [[M, I], [0, 0]]) whose top-right block is J(T).
inline Matrix expm_integral(const Matrix& m, double horizon) {
  const Eigen::Index n = m.rows();
  if (horizon == 0.0) return Matrix::Zero(n, n);

  Eigen::JacobiSVD<Matrix> svd(m);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(n - 1);
  if (smax > 0.0 && smin > 1e-10 * smax) {
    Matrix e = expm(horizon * m);
    return m.partialPivLu().solve(e - Matrix::Identity(n, n));
  }

  Matrix block = Matrix::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = m;
  block.topRightCorner(n, n) = Matrix::Identity(n, n);
  return expm(horizon * block).topRightCorner(n, n);
}

}  // namespace linalg
}  // namespace harvex
