#pragma once

// Convex QP by a Mehrotra predictor-corrector interior-point method.
//
//   minimize  1/2 x'Hx + g'x   subject to  F x <= h,  E x = e.
//
// Feasibility is settled up front with the phase-1 LP, so an empty feasible set is
// reported as `infeasible` rather than as an iteration-limit stall.

#include <algorithm>
#include <limits>

#include "layercon/lp.hpp"

namespace layercon {

struct QpProblem {
  Matrix H;
  Vector g;
  Matrix Fineq;
  Vector hineq;
  Matrix Feq;
  Vector heq;
};

enum class QpStatus { Optimal, Infeasible, MaxIter };

inline const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::MaxIter: return "max_iter";
  }
  return "unknown";
}

struct QpResult {
  QpStatus status = QpStatus::Infeasible;
  Vector x;
  Vector z;  ///< inequality multipliers
  Vector y;  ///< equality multipliers
  double objective = std::numeric_limits<double>::quiet_NaN();
  double kkt_residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

/// Infinity-norm KKT residual of a primal-dual point: max of stationarity, primal
/// violation, equality violation and complementarity.
inline double qp_kkt_residual(const QpProblem& p, const Vector& x, const Vector& z, const Vector& y) {
  Vector stat = p.H * x + p.g;
  double r = 0.0;
  if (p.Fineq.rows() > 0) {
    stat += p.Fineq.transpose() * z;
    const Vector slack = p.hineq - p.Fineq * x;
    r = std::max(r, (-slack).cwiseMax(0.0).maxCoeff());
    r = std::max(r, (z.array() * slack.array()).abs().maxCoeff());
    r = std::max(r, (-z).cwiseMax(0.0).maxCoeff());
  }
  if (p.Feq.rows() > 0) {
    stat += p.Feq.transpose() * y;
    r = std::max(r, (p.Feq * x - p.heq).cwiseAbs().maxCoeff());
  }
  if (stat.size() > 0) r = std::max(r, stat.cwiseAbs().maxCoeff());
  return r;
}

namespace detail {

inline QpProblem normalized(const QpProblem& p) {
  QpProblem q = p;
  const Eigen::Index n = p.H.rows();
  if (q.Fineq.size() == 0) q.Fineq = Matrix(0, n);
  if (q.hineq.size() == 0) q.hineq = Vector(0);
  if (q.Feq.size() == 0) q.Feq = Matrix(0, n);
  if (q.heq.size() == 0) q.heq = Vector(0);
  return q;
}

inline double max_step(const Vector& v, const Vector& dv) {
  double a = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv(i) < 0) a = std::min(a, -v(i) / dv(i));
  return a;
}

}  // namespace detail

inline QpResult solve_qp(const QpProblem& problem, double tol = 1e-7, int max_iter = 100) {
  const QpProblem p = detail::normalized(problem);
  const Eigen::Index n = p.H.rows();
  require(p.H.cols() == n && p.g.size() == n, ErrorCode::DimensionMismatch, "QP cost has inconsistent dimensions");
  require(p.Fineq.cols() == n && p.Fineq.rows() == p.hineq.size(), ErrorCode::DimensionMismatch,
          "QP inequality block has inconsistent dimensions");
  require(p.Feq.cols() == n && p.Feq.rows() == p.heq.size(), ErrorCode::DimensionMismatch,
          "QP equality block has inconsistent dimensions");
  require(is_symmetric(p.H), ErrorCode::InvalidArgument, "QP Hessian is not symmetric");
  require(all_finite(p.H) && all_finite(p.g) && all_finite(p.Fineq) && all_finite(p.hineq) && all_finite(p.Feq) &&
              all_finite(p.heq),
          ErrorCode::InvalidArgument, "QP data has non-finite entries");

  QpResult out;
  const Eigen::Index mi = p.Fineq.rows();
  const Eigen::Index me = p.Feq.rows();

  const FeasibilityResult feas = solve_lp_feasibility(p.Fineq.rows() > 0 ? p.Fineq : Matrix(0, n), p.hineq, p.Feq, p.heq);
  if (!feas.feasible) {
    out.status = QpStatus::Infeasible;
    return out;
  }

  Vector x = feas.witness.size() == n ? feas.witness : Vector::Zero(n);
  Vector s = (p.hineq - p.Fineq * x).cwiseMax(1.0);
  Vector z = Vector::Ones(mi);
  Vector y = Vector::Zero(me);

  Vector best_x = x, best_z = z, best_y = y;
  double best_res = std::numeric_limits<double>::infinity();

  Matrix kkt(n + me, n + me);
  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it + 1;
    const Vector rd = p.H * x + p.g + p.Fineq.transpose() * z + p.Feq.transpose() * y;
    const Vector rp = p.Fineq * x + s - p.hineq;
    const Vector re = p.Feq * x - p.heq;
    const double mu = mi > 0 ? s.dot(z) / static_cast<double>(mi) : 0.0;

    const double res = qp_kkt_residual(p, x, z, y);
    if (res < best_res) {
      best_res = res;
      best_x = x;
      best_z = z;
      best_y = y;
    }
    const double rp_norm = mi ? rp.cwiseAbs().maxCoeff() : 0.0;
    if (res <= 0.1 * tol && rp_norm <= 0.1 * tol) break;

    const Vector w = (z.array() / s.array()).matrix();
    kkt.setZero();
    kkt.topLeftCorner(n, n) = p.H + p.Fineq.transpose() * w.asDiagonal() * p.Fineq;
    kkt.topLeftCorner(n, n) += 1e-12 * Matrix::Identity(n, n);
    if (me > 0) {
      kkt.topRightCorner(n, me) = p.Feq.transpose();
      kkt.bottomLeftCorner(me, n) = p.Feq;
      kkt.bottomRightCorner(me, me) = -1e-12 * Matrix::Identity(me, me);
    }
    const Eigen::PartialPivLU<Matrix> lu(kkt);

    // Solves the Newton system for a given complementarity right-hand side rc.
    auto newton = [&](const Vector& rc, Vector& dx, Vector& ds, Vector& dz, Vector& dy) {
      Vector rhs(n + me);
      const Vector sinv_term = ((z.array() * rp.array() - rc.array()) / s.array()).matrix();
      rhs.head(n) = -rd - p.Fineq.transpose() * sinv_term;
      if (me > 0) rhs.tail(me) = -re;
      Vector sol = lu.solve(rhs);
      // One step of iterative refinement keeps the late, ill-conditioned iterations accurate.
      sol += lu.solve(rhs - kkt * sol);
      dx = sol.head(n);
      dy = sol.tail(me);
      dz = sinv_term + (w.array() * (p.Fineq * dx).array()).matrix();
      ds = -rp - p.Fineq * dx;
    };

    Vector dx, ds, dz, dy;
    const Vector rc_aff = (s.array() * z.array()).matrix();
    newton(rc_aff, dx, ds, dz, dy);
    if (mi == 0) {
      x += dx;
      y += dy;
      continue;
    }
    const double a_aff = std::min(detail::max_step(s, ds), detail::max_step(z, dz));
    const double mu_aff = (s + a_aff * ds).dot(z + a_aff * dz) / static_cast<double>(mi);
    const double sigma = std::pow(mu_aff / std::max(mu, 1e-300), 3.0);
    const Vector rc = (s.array() * z.array() + ds.array() * dz.array() - sigma * mu).matrix();
    newton(rc, dx, ds, dz, dy);
    const double alpha = std::min(1.0, 0.995 * std::min(detail::max_step(s, ds), detail::max_step(z, dz)));
    x += alpha * dx;
    s += alpha * ds;
    z += alpha * dz;
    y += alpha * dy;
    s = s.cwiseMax(1e-300);
    z = z.cwiseMax(1e-300);
  }
  const double res = qp_kkt_residual(p, x, z, y);
  if (res < best_res) {
    best_res = res;
    best_x = x;
    best_z = z;
    best_y = y;
  }
  out.x = best_x;
  out.z = best_z;
  out.y = best_y;
  out.kkt_residual = best_res;
  out.objective = 0.5 * best_x.dot(p.H * best_x) + p.g.dot(best_x);
  out.status = best_res <= tol ? QpStatus::Optimal : QpStatus::MaxIter;
  return out;
}

}  // namespace layercon
