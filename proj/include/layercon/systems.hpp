#pragma once

#include <cmath>

#include "layercon/linalg.hpp"

namespace layercon {

struct CtSystem {
  Matrix A;
  Matrix B;
  Matrix C;

  CtSystem() = default;
  CtSystem(Matrix a, Matrix b, Matrix c) : A(std::move(a)), B(std::move(b)), C(std::move(c)) { validate(); }

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return B.cols(); }
  Eigen::Index p() const { return C.rows(); }

  void validate() const {
    require(A.rows() == A.cols() && A.rows() > 0, ErrorCode::DimensionMismatch, "A must be square and nonempty, got " + shape(A));
    require(B.rows() == A.rows(), ErrorCode::DimensionMismatch, "B has " + shape(B) + ", A has " + shape(A));
    require(C.cols() == A.rows(), ErrorCode::DimensionMismatch, "C has " + shape(C) + ", A has " + shape(A));
    require(C.rows() <= A.rows(), ErrorCode::DimensionMismatch, "output dimension exceeds state dimension");
    require(all_finite(A) && all_finite(B) && all_finite(C), ErrorCode::InvalidArgument, "system matrices must be finite");
  }

  bool operator==(const CtSystem& o) const { return same(A, o.A) && same(B, o.B) && same(C, o.C); }
};

struct DtSystem {
  Matrix Ad;
  Matrix Bd;
  Matrix C;
  double period = 0.0;

  Eigen::Index n() const { return Ad.rows(); }
  Eigen::Index m() const { return Bd.cols(); }
  Eigen::Index p() const { return C.rows(); }

  Vector step(const Vector& x, const Vector& u) const {
    require(x.size() == n() && u.size() == m(), ErrorCode::DimensionMismatch,
            "step: state/input sizes " + std::to_string(x.size()) + "/" + std::to_string(u.size()) + " do not match " +
                std::to_string(n()) + "/" + std::to_string(m()));
    return Ad * x + Bd * u;
  }

  Vector output(const Vector& x) const {
    require(x.size() == n(), ErrorCode::DimensionMismatch, "output: state size mismatch");
    return C * x;
  }
};

inline Vector step(const DtSystem& sys, const Vector& x, const Vector& u) { return sys.step(x, u); }

/// Exact zero-order-hold discretization via the exponential of [[A, B], [0, 0]] * period.
inline DtSystem discretize_zoh(const CtSystem& sys, double period) {
  require(std::isfinite(period) && period > 0.0, ErrorCode::InvalidArgument,
          "discretization period must be positive, got " + std::to_string(period));
  sys.validate();
  const Eigen::Index n = sys.n();
  const Eigen::Index m = sys.m();
  Matrix aug = Matrix::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = sys.A;
  aug.topRightCorner(n, m) = sys.B;
  const Matrix e = expm(aug * period);
  return DtSystem{e.topLeftCorner(n, n), e.topRightCorner(n, m), sys.C, period};
}

/// Low-level period T_L, high-level period T_H and mission length T.
struct RatePair {
  double T_L = 0.0;
  double T_H = 0.0;
  double T = 0.0;

  RatePair() = default;
  RatePair(double tl, double th, double total) : T_L(tl), T_H(th), T(total) { validate(); }

  static long integer_ratio(double num, double den, const char* what) {
    const double r = num / den;
    const double k = std::round(r);
    require(k >= 1.0 && std::abs(r - k) <= 1e-9 * std::max(1.0, k), ErrorCode::InvalidArgument,
            std::string(what) + " must be a positive integer, got " + std::to_string(r));
    return static_cast<long>(k);
  }

  void validate() const {
    require(T_L > 0.0 && T_H > 0.0 && T > 0.0, ErrorCode::InvalidArgument, "rates must be positive");
    integer_ratio(T_H, T_L, "T_H/T_L");
    integer_ratio(T, T_H, "T/T_H");
  }

  long inner_steps() const { return integer_ratio(T_H, T_L, "T_H/T_L"); }
  long outer_steps() const { return integer_ratio(T, T_H, "T/T_H"); }

  bool operator==(const RatePair&) const = default;
};

}  // namespace layercon
