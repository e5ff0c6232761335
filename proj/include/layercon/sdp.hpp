#pragma once

// Small dense semidefinite programs by a primal log-det barrier method.
//
//   maximize c'x  subject to  F_b(x) = F_b0 + sum_i x_i F_bi  >= 0  for every block b.
//
// Phase I looks for a strictly feasible point by shifting every block with a common
// scalar; phase II follows the central path from there.

#include <limits>
#include <vector>

#include "layercon/core.hpp"

namespace layercon {

struct LmiBlock {
  Matrix F0;
  std::vector<Matrix> Fi;  ///< one per variable; an empty matrix means that coefficient is zero
};

struct SdpProblem {
  Vector c;
  std::vector<LmiBlock> blocks;
};

struct SdpOptions {
  double gap_tol = 1e-7;    ///< stop when (total block size)/t falls below this
  double t0 = 1.0;
  double t_factor = 20.0;
  int max_newton = 50;      ///< per centering step
  double strict_margin = 1e-7;
};

enum class SdpStatus { Optimal, Infeasible, NumericalFailure };

inline const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "optimal";
    case SdpStatus::Infeasible: return "infeasible";
    case SdpStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

struct SdpResult {
  SdpStatus status = SdpStatus::Infeasible;
  Vector x;
  double objective = -std::numeric_limits<double>::infinity();
  double min_block_eigenvalue = -std::numeric_limits<double>::infinity();
};

namespace detail {

inline Matrix lmi_value(const LmiBlock& b, const Vector& x) {
  Matrix f = b.F0;
  for (std::size_t i = 0; i < b.Fi.size(); ++i)
    if (b.Fi[i].size() > 0 && x(static_cast<Eigen::Index>(i)) != 0.0) f += x(static_cast<Eigen::Index>(i)) * b.Fi[i];
  return f;
}

inline double min_block_eig(const SdpProblem& p, const Vector& x) {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& b : p.blocks) lo = std::min(lo, min_sym_eigenvalue(lmi_value(b, x)));
  return lo;
}

inline bool in_cone(const SdpProblem& p, const Vector& x) {
  for (const auto& b : p.blocks) {
    Eigen::LLT<Matrix> llt(lmi_value(b, x));
    if (llt.info() != Eigen::Success) return false;
    if (!(llt.matrixLLT().diagonal().minCoeff() > 0.0)) return false;
  }
  return true;
}

// Runs centering steps for an increasing t. `stop` is polled after every centering
// step and may end the path early (used by phase I).
template <class Stop>
bool barrier_path(const SdpProblem& p, Vector& x, const SdpOptions& opt, Stop stop) {
  const Eigen::Index nv = p.c.size();
  double total_dim = 0.0;
  for (const auto& b : p.blocks) total_dim += static_cast<double>(b.F0.rows());
  double t = opt.t0;
  std::vector<Matrix> g(static_cast<std::size_t>(nv));
  for (int outer = 0; outer < 200; ++outer) {
    for (int it = 0; it < opt.max_newton; ++it) {
      Vector grad = -t * p.c;
      Matrix hess = Matrix::Zero(nv, nv);
      for (const auto& b : p.blocks) {
        Eigen::LLT<Matrix> llt(lmi_value(b, x));
        if (llt.info() != Eigen::Success) return false;
        std::vector<Eigen::Index> active;
        for (Eigen::Index i = 0; i < nv; ++i) {
          const Matrix& fi = b.Fi[static_cast<std::size_t>(i)];
          if (fi.size() == 0) continue;
          g[static_cast<std::size_t>(i)] = llt.solve(fi);
          grad(i) -= g[static_cast<std::size_t>(i)].trace();
          active.push_back(i);
        }
        for (std::size_t a = 0; a < active.size(); ++a) {
          const Matrix& ga = g[static_cast<std::size_t>(active[a])];
          for (std::size_t c = a; c < active.size(); ++c) {
            const Matrix& gc = g[static_cast<std::size_t>(active[c])];
            const double v = ga.cwiseProduct(gc.transpose()).sum();
            hess(active[a], active[c]) += v;
            if (c != a) hess(active[c], active[a]) += v;
          }
        }
      }
      const double reg = 1e-12 * std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
      hess.diagonal().array() += reg;
      const Vector dx = -hess.ldlt().solve(grad);
      if (!dx.allFinite()) return false;
      const double decrement = -grad.dot(dx);
      if (decrement / 2.0 <= 1e-9) break;
      // Damped Newton step for a self-concordant barrier; full steps once inside the
      // quadratic-convergence region. Only cone membership is checked, never function
      // values, which lose their digits once t is large.
      const double lam = std::sqrt(std::max(decrement, 0.0));
      double alpha = lam > 0.25 ? 1.0 / (1.0 + lam) : 1.0;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        const Vector xn = x + alpha * dx;
        if (in_cone(p, xn)) {
          x = xn;
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!moved) break;
    }
    if (stop(x)) return true;
    if (total_dim / t < opt.gap_tol) return true;
    t *= opt.t_factor;
  }
  return true;
}

}  // namespace detail

/// Solves the SDP. Returns `Infeasible` when phase I cannot find a strictly feasible point.
inline SdpResult solve_sdp(const SdpProblem& p, const SdpOptions& opt = {}) {
  const Eigen::Index nv = p.c.size();
  for (const auto& b : p.blocks) {
    require(b.F0.rows() == b.F0.cols() && is_symmetric(b.F0), ErrorCode::InvalidArgument, "LMI block F0 must be symmetric");
    require(static_cast<Eigen::Index>(b.Fi.size()) == nv, ErrorCode::DimensionMismatch,
            "LMI block needs one coefficient slot per variable");
    for (const auto& fi : b.Fi)
      require(fi.size() == 0 || (fi.rows() == b.F0.rows() && fi.cols() == b.F0.cols() && is_symmetric(fi)),
              ErrorCode::InvalidArgument, "LMI coefficient has wrong shape or is not symmetric");
  }
  SdpResult out;

  // Phase I: minimize tau subject to F_b(x) + tau I >= 0 and tau >= -1.
  Vector x = Vector::Zero(nv);
  const double lo = detail::min_block_eig(p, x);
  if (!(lo > opt.strict_margin)) {
    SdpProblem ph1;
    ph1.c = Vector::Zero(nv + 1);
    ph1.c(nv) = -1.0;
    for (const auto& b : p.blocks) {
      LmiBlock nb;
      nb.F0 = b.F0;
      nb.Fi = b.Fi;
      nb.Fi.push_back(Matrix::Identity(b.F0.rows(), b.F0.cols()));
      ph1.blocks.push_back(std::move(nb));
    }
    LmiBlock floor_block;
    floor_block.F0 = Matrix::Ones(1, 1);
    floor_block.Fi.assign(static_cast<std::size_t>(nv + 1), Matrix());
    floor_block.Fi.back() = Matrix::Ones(1, 1);
    ph1.blocks.push_back(std::move(floor_block));
    Vector xt = Vector::Zero(nv + 1);
    xt(nv) = 1.0 - lo;
    auto reached = [&](const Vector& v) { return v(nv) < -opt.strict_margin; };
    SdpOptions o1 = opt;
    o1.gap_tol = 1e-9;
    if (!detail::barrier_path(ph1, xt, o1, reached)) {
      out.status = SdpStatus::NumericalFailure;
      return out;
    }
    if (!(xt(nv) < -opt.strict_margin)) {
      out.status = SdpStatus::Infeasible;
      out.min_block_eigenvalue = -xt(nv);
      return out;
    }
    x = xt.head(nv);
  }

  auto never = [](const Vector&) { return false; };
  if (!detail::barrier_path(p, x, opt, never)) {
    out.status = SdpStatus::NumericalFailure;
    return out;
  }
  out.status = SdpStatus::Optimal;
  out.x = x;
  out.objective = p.c.dot(x);
  out.min_block_eigenvalue = detail::min_block_eig(p, x);
  return out;
}

struct MaxMinEigResult {
  bool feasible = false;
  Matrix Mtilde;
  Matrix Ktilde;
  double s = 0.0;
};

/// maximize s  s.t.  s >= eps_pd,  Mt >= s I,  Mt <= rho I,
///                   [I, C Mt; Mt C', Mt] >= 0,
///                   [Mt, A Mt + B Kt; (A Mt + B Kt)', (1 - 2 lambda) Mt] >= 0.
/// The `rho` cap keeps the feasible set bounded; it does not bind the output-facing
/// directions, which the second LMI already bounds.
inline MaxMinEigResult sdp_max_min_eig(const Matrix& c_out, const Matrix& a_l, const Matrix& b_l, double lambda,
                                       double eps_pd = 1e-6, double rho = 1e3, const SdpOptions& opt = {}) {
  require(lambda > 0.0 && lambda < 0.5, ErrorCode::InvalidArgument,
          "lambda must lie in (0, 1/2), got " + std::to_string(lambda));
  require(eps_pd > 0.0, ErrorCode::InvalidArgument, "eps_pd must be positive");
  require(rho > eps_pd, ErrorCode::InvalidArgument, "Mtilde bound must exceed eps_pd");
  const Eigen::Index n = a_l.rows();
  const Eigen::Index m = b_l.cols();
  const Eigen::Index p = c_out.rows();
  require(a_l.cols() == n && b_l.rows() == n && c_out.cols() == n, ErrorCode::DimensionMismatch,
          "sdp_max_min_eig: inconsistent A_L " + shape(a_l) + ", B_L " + shape(b_l) + ", C " + shape(c_out));

  // Variable layout: upper triangle of Mt (row-major), then Kt (row-major), then s.
  const Eigen::Index n_m = n * (n + 1) / 2;
  const Eigen::Index n_k = m * n;
  const Eigen::Index nv = n_m + n_k + 1;
  std::vector<Matrix> mbasis;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) {
      Matrix e = Matrix::Zero(n, n);
      e(i, j) = 1.0;
      e(j, i) = 1.0;
      mbasis.push_back(e);
    }
  auto kbasis = [&](Eigen::Index idx) {
    Matrix e = Matrix::Zero(m, n);
    e(idx / n, idx % n) = 1.0;
    return e;
  };
  auto empty_slots = [&] { return std::vector<Matrix>(static_cast<std::size_t>(nv)); };

  SdpProblem prob;
  prob.c = Vector::Zero(nv);
  prob.c(nv - 1) = 1.0;

  {  // s - eps_pd >= 0
    LmiBlock b{Matrix::Constant(1, 1, -eps_pd), empty_slots()};
    b.Fi.back() = Matrix::Ones(1, 1);
    prob.blocks.push_back(std::move(b));
  }
  {  // Mt - s I >= 0
    LmiBlock b{Matrix::Zero(n, n), empty_slots()};
    for (Eigen::Index k = 0; k < n_m; ++k) b.Fi[static_cast<std::size_t>(k)] = mbasis[static_cast<std::size_t>(k)];
    b.Fi.back() = -Matrix::Identity(n, n);
    prob.blocks.push_back(std::move(b));
  }
  {  // rho I - Mt >= 0
    LmiBlock b{rho * Matrix::Identity(n, n), empty_slots()};
    for (Eigen::Index k = 0; k < n_m; ++k) b.Fi[static_cast<std::size_t>(k)] = -mbasis[static_cast<std::size_t>(k)];
    prob.blocks.push_back(std::move(b));
  }
  {  // [I, C Mt; Mt C', Mt] >= 0
    LmiBlock b{Matrix::Zero(p + n, p + n), empty_slots()};
    b.F0.topLeftCorner(p, p) = Matrix::Identity(p, p);
    for (Eigen::Index k = 0; k < n_m; ++k) {
      const Matrix& e = mbasis[static_cast<std::size_t>(k)];
      Matrix f = Matrix::Zero(p + n, p + n);
      f.topRightCorner(p, n) = c_out * e;
      f.bottomLeftCorner(n, p) = (c_out * e).transpose();
      f.bottomRightCorner(n, n) = e;
      b.Fi[static_cast<std::size_t>(k)] = f;
    }
    prob.blocks.push_back(std::move(b));
  }
  {  // [Mt, A Mt + B Kt; *, (1 - 2 lambda) Mt] >= 0
    LmiBlock b{Matrix::Zero(2 * n, 2 * n), empty_slots()};
    for (Eigen::Index k = 0; k < n_m; ++k) {
      const Matrix& e = mbasis[static_cast<std::size_t>(k)];
      Matrix f = Matrix::Zero(2 * n, 2 * n);
      f.topLeftCorner(n, n) = e;
      f.topRightCorner(n, n) = a_l * e;
      f.bottomLeftCorner(n, n) = (a_l * e).transpose();
      f.bottomRightCorner(n, n) = (1.0 - 2.0 * lambda) * e;
      b.Fi[static_cast<std::size_t>(k)] = f;
    }
    for (Eigen::Index k = 0; k < n_k; ++k) {
      const Matrix bk = b_l * kbasis(k);
      if (bk.cwiseAbs().maxCoeff() == 0.0) continue;
      Matrix f = Matrix::Zero(2 * n, 2 * n);
      f.topRightCorner(n, n) = bk;
      f.bottomLeftCorner(n, n) = bk.transpose();
      b.Fi[static_cast<std::size_t>(n_m + k)] = f;
    }
    prob.blocks.push_back(std::move(b));
  }

  const SdpResult r = solve_sdp(prob, opt);
  MaxMinEigResult out;
  if (r.status != SdpStatus::Optimal) return out;
  out.feasible = true;
  out.Mtilde = Matrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n_m; ++k) out.Mtilde += r.x(k) * mbasis[static_cast<std::size_t>(k)];
  out.Ktilde = Matrix::Zero(m, n);
  for (Eigen::Index k = 0; k < n_k; ++k) out.Ktilde(k / n, k % n) = r.x(n_m + k);
  out.s = r.x(nv - 1);
  return out;
}

}  // namespace layercon
