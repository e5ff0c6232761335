#pragma once

// Dense linear-algebra kernels shared by the synthesis and propagation code.

#include <unsupported/Eigen/MatrixFunctions>

#include <complex>

#include "layercon/core.hpp"

namespace layercon {

/// Matrix exponential (Pade approximant with scaling and squaring).
inline Matrix expm(const Matrix& a) {
  require(a.rows() == a.cols(), ErrorCode::DimensionMismatch, "expm needs a square matrix, got " + shape(a));
  require(all_finite(a), ErrorCode::InvalidArgument, "expm input has non-finite entries");
  Matrix out = a.exp();
  require(all_finite(out), ErrorCode::DomainError, "expm overflowed");
  return out;
}

/// Largest eigenvalue modulus. Uses Hessenberg reduction followed by shifted QR sweeps.
inline double spectral_radius(const Matrix& a) {
  require(a.rows() == a.cols(), ErrorCode::DimensionMismatch, "spectral_radius needs a square matrix, got " + shape(a));
  require(all_finite(a), ErrorCode::InvalidArgument, "spectral_radius input has non-finite entries");
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  require(es.info() == Eigen::Success, ErrorCode::NonConvergence, "QR iteration did not converge");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Largest singular value.
inline double spectral_norm(const Matrix& a) {
  require(all_finite(a), ErrorCode::InvalidArgument, "spectral_norm input has non-finite entries");
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

/// Solves F^T N F - N = -Qrhs by vectorization. Requires spectral_radius(F) < 1.
inline Matrix solve_discrete_lyapunov(const Matrix& f, const Matrix& qrhs) {
  require(f.rows() == f.cols(), ErrorCode::DimensionMismatch, "Lyapunov F must be square, got " + shape(f));
  require(qrhs.rows() == f.rows() && qrhs.cols() == f.cols(), ErrorCode::DimensionMismatch,
          "Lyapunov right-hand side " + shape(qrhs) + " does not match F " + shape(f));
  const double rho = spectral_radius(f);
  require(rho < 1.0, ErrorCode::DomainError,
          "discrete Lyapunov equation needs a Schur-stable F (spectral radius " + std::to_string(rho) + ")");
  const Eigen::Index n = f.rows();
  // vec(F^T N F) = (F^T kron F^T) vec(N) for column-major vec.
  Matrix kron(n * n, n * n);
  const Matrix ft = f.transpose();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) kron.block(i * n, j * n, n, n) = ft(i, j) * ft;
  kron -= Matrix::Identity(n * n, n * n);
  const Matrix q = symmetrize(qrhs);
  const Vector rhs = -Eigen::Map<const Vector>(q.data(), n * n);
  const Vector vec_n = kron.fullPivLu().solve(rhs);
  const Matrix out = Eigen::Map<const Matrix>(vec_n.data(), n, n);
  return symmetrize(out);
}

struct LstsqResult {
  Matrix solution;
  double residual = 0.0;  ///< Frobenius norm of A X - B.
  Eigen::Index rank = 0;
};

/// Minimum-norm least-squares solution of A X = B (QR with column pivoting).
inline LstsqResult solve_linear_lstsq(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), ErrorCode::DimensionMismatch,
          "lstsq: A is " + shape(a) + " but B is " + shape(b));
  require(all_finite(a) && all_finite(b), ErrorCode::InvalidArgument, "lstsq input has non-finite entries");
  LstsqResult out;
  if (a.cols() == 0) {
    out.solution = Matrix::Zero(0, b.cols());
    out.residual = b.norm();
    return out;
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
  const double scale = a.cwiseAbs().maxCoeff();
  cod.setThreshold(scale > 0 ? 1e-13 * std::max(a.rows(), a.cols()) : 1.0);
  out.solution = cod.solve(b);
  out.residual = (a * out.solution - b).norm();
  out.rank = cod.rank();
  return out;
}

}  // namespace layercon
