#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace layercon {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Failure categories. The CLI maps each one to a stable exit code.
enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  NonConvergence,
  DomainError,
  AssumptionViolated,
  NotStabilizable,
  SdpInfeasible,
  EmptyPlanningSet,
  Unbounded,
  PlannerInfeasible,
  ScenarioError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::DimensionMismatch: return "dimension mismatch";
    case ErrorCode::NonConvergence: return "non-convergence";
    case ErrorCode::DomainError: return "domain error";
    case ErrorCode::AssumptionViolated: return "lifting assumption violated";
    case ErrorCode::NotStabilizable: return "not stabilizable";
    case ErrorCode::SdpInfeasible: return "SDP infeasible";
    case ErrorCode::EmptyPlanningSet: return "empty planning set";
    case ErrorCode::Unbounded: return "unbounded set";
    case ErrorCode::PlannerInfeasible: return "planner infeasible";
    case ErrorCode::ScenarioError: return "scenario error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline bool is_symmetric(const Matrix& m, double rel_tol = 1e-10) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

/// Eigenvalues of a symmetric matrix, ascending.
inline Vector sym_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline double min_sym_eigenvalue(const Matrix& m) { return sym_eigenvalues(m).minCoeff(); }
inline double max_sym_eigenvalue(const Matrix& m) { return sym_eigenvalues(m).maxCoeff(); }

/// Symmetric matrix power m^p via eigendecomposition. Eigenvalues must exceed `floor`.
inline Matrix sym_power(const Matrix& m, double p, double floor = 1e-12) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  const Vector& w = es.eigenvalues();
  require(w.minCoeff() > floor, ErrorCode::DomainError,
          "matrix is not positive definite (min eigenvalue " + std::to_string(w.minCoeff()) + ")");
  Vector wp = w.array().pow(p);
  return es.eigenvectors() * wp.asDiagonal() * es.eigenvectors().transpose();
}

inline Matrix sym_sqrt(const Matrix& m) { return sym_power(m, 0.5); }
inline Matrix sym_inv_sqrt(const Matrix& m) { return sym_power(m, -0.5); }

/// Exact equality that tolerates differing shapes (Eigen's operator== requires equal sizes).
inline bool same(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

inline bool same(const Vector& a, const Vector& b) { return a.size() == b.size() && (a.size() == 0 || a == b); }

inline Matrix block_diag(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

}  // namespace layercon
