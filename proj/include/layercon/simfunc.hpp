#pragma once

// Simulation functions V(xbar, x) = (x - P xbar)' M (x - P xbar) of a higher-layer
// model by a lower-layer plant, together with the interface controller
//   u = R ubar + Q xbar + K (x - P xbar).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>

#include "layercon/sdp.hpp"
#include "layercon/systems.hpp"

namespace layercon {

struct LiftPair {
  Matrix P;  ///< n x nbar
  Matrix Q;  ///< m x nbar
  double residual_cp = 0.0;
  double residual_sylv = 0.0;
};

enum class SynthMethod { Lyapunov, Sdp };

inline const char* to_string(SynthMethod m) { return m == SynthMethod::Lyapunov ? "lyapunov" : "sdp"; }

inline SynthMethod parse_synth_method(const std::string& s) {
  if (s == "lyapunov") return SynthMethod::Lyapunov;
  if (s == "sdp") return SynthMethod::Sdp;
  throw Error(ErrorCode::InvalidArgument, "unknown synthesis method '" + s + "' (expected lyapunov or sdp)");
}

struct SimFunction {
  LiftPair lift;
  Matrix M;
  Matrix K;
  double lambda = 0.0;
  Matrix R;
  double gamma = 0.0;
  SynthMethod method = SynthMethod::Lyapunov;
  bool R_pseudo_inverse = false;  ///< B_L' M B_L was singular; R came from a pseudo-inverse
};

struct Precision {
  double epsilon = 0.0;
  double u_bar_max = 0.0;
  double v0_max = 0.0;
};

inline void require_same_rate(const DtSystem& lower, const DtSystem& higher) {
  require(lower.p() == higher.p(), ErrorCode::DimensionMismatch,
          "lower and higher systems must share the output dimension (" + std::to_string(lower.p()) + " vs " +
              std::to_string(higher.p()) + ")");
  require(std::abs(lower.period - higher.period) <= 1e-12 * std::max(1.0, lower.period), ErrorCode::InvalidArgument,
          "lower and higher systems must be discretized with the same period");
}

/// Solves C P = Cbar and P Abar = A P + B Q for the minimum-norm (P, Q).
inline LiftPair solve_lift(const DtSystem& lower, const DtSystem& higher, double tol = 1e-6) {
  require_same_rate(lower, higher);
  const Eigen::Index n = lower.n(), m = lower.m(), p = lower.p(), nb = higher.n();
  const Eigen::Index np = n * nb, nq = m * nb;
  const Matrix in_b = Matrix::Identity(nb, nb);
  const Matrix in_n = Matrix::Identity(n, n);
  // Column-major vec identities: vec(A X B) = (B' kron A) vec(X).
  auto kron = [](const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
  };
  Matrix sys = Matrix::Zero(p * nb + n * nb, np + nq);
  Vector rhs = Vector::Zero(p * nb + n * nb);
  sys.block(0, 0, p * nb, np) = kron(in_b, lower.C);
  rhs.head(p * nb) = Eigen::Map<const Vector>(higher.C.data(), p * nb);
  sys.block(p * nb, 0, n * nb, np) = kron(higher.Ad.transpose(), in_n) - kron(in_b, lower.Ad);
  sys.block(p * nb, np, n * nb, nq) = -kron(in_b, lower.Bd);
  const LstsqResult ls = solve_linear_lstsq(sys, rhs);
  LiftPair out;
  out.P = Eigen::Map<const Matrix>(ls.solution.data(), n, nb);
  out.Q = Eigen::Map<const Matrix>(ls.solution.data() + np, m, nb);
  out.residual_cp = (lower.C * out.P - higher.C).norm();
  out.residual_sylv = (out.P * higher.Ad - lower.Ad * out.P - lower.Bd * out.Q).norm();
  const double combined = std::hypot(out.residual_cp, out.residual_sylv);
  require(combined <= tol, ErrorCode::AssumptionViolated,
          "no lifting (P, Q) exists: residual " + std::to_string(combined) + " exceeds " + std::to_string(tol));
  return out;
}

/// Discrete-time LQR gain (u = K x) by Riccati fixed-point iteration.
inline Matrix lqr_gain(const Matrix& a, const Matrix& b, const Matrix& qw = Matrix(), const Matrix& rw = Matrix(),
                       int max_iter = 200000) {
  const Eigen::Index n = a.rows(), m = b.cols();
  const Matrix q = qw.size() ? qw : Matrix::Identity(n, n);
  const Matrix r = rw.size() ? rw : Matrix::Identity(m, m);
  require(q.rows() == n && q.cols() == n && r.rows() == m && r.cols() == m, ErrorCode::DimensionMismatch,
          "LQR weights have the wrong shape");
  Matrix x = q;
  bool converged = false;
  for (int it = 0; it < max_iter; ++it) {
    const Matrix btx = b.transpose() * x;
    const Matrix gain = (r + btx * b).ldlt().solve(btx * a);
    const Matrix xn = symmetrize(a.transpose() * x * a - a.transpose() * x * b * gain + q);
    if (!all_finite(xn) || xn.norm() > 1e14) break;
    const double change = (xn - x).norm();
    x = xn;
    if (change <= 1e-13 * std::max(1.0, x.norm())) {
      converged = true;
      break;
    }
  }
  require(converged, ErrorCode::NotStabilizable, "Riccati iteration diverged; the lower system is not stabilizable");
  const Matrix k = -(r + b.transpose() * x * b).ldlt().solve(b.transpose() * x * a);
  const double rho = spectral_radius(a + b * k);
  require(rho < 1.0, ErrorCode::NotStabilizable,
          "LQR closed loop is not Schur stable (spectral radius " + std::to_string(rho) + ")");
  return k;
}

struct Certificate {
  Matrix M;
  Matrix K;
  double lambda = 0.0;
};

/// Closed-form certificate: LQR gain, then a Lyapunov solve for the contraction rate
/// lambda = beta (1 - rho(A_cl)^2) / 2.
inline Certificate synth_lyapunov(const DtSystem& lower, double beta = 0.9, const Matrix& qw = Matrix(),
                                  const Matrix& rw = Matrix()) {
  require(beta > 0.0 && beta < 1.0, ErrorCode::InvalidArgument, "beta must lie in (0, 1)");
  Certificate c;
  c.K = lqr_gain(lower.Ad, lower.Bd, qw, rw);
  const Matrix a_cl = lower.Ad + lower.Bd * c.K;
  const double rho = spectral_radius(a_cl);
  c.lambda = beta * (1.0 - rho * rho) / 2.0;
  const Matrix a_lam = a_cl / std::sqrt(1.0 - 2.0 * c.lambda);
  const Matrix ctc = lower.C.transpose() * lower.C;
  const Matrix q_lyap = a_lam.transpose() * ctc * a_lam + 1e-8 * Matrix::Identity(lower.n(), lower.n());
  const Matrix n_sol = solve_discrete_lyapunov(a_lam, q_lyap);
  c.M = symmetrize(n_sol + ctc);
  return c;
}

struct OptimalR {
  Matrix R;
  bool pseudo_inverse = false;
};

/// R = (B_L' M B_L)^{-1} B_L' M P Bbar_L, with a pseudo-inverse when B_L' M B_L is singular.
inline OptimalR optimal_R(const DtSystem& lower, const DtSystem& higher, const LiftPair& lift, const Matrix& M) {
  const Matrix g = symmetrize(lower.Bd.transpose() * M * lower.Bd);
  const Matrix rhs = lower.Bd.transpose() * M * lift.P * higher.Bd;
  OptimalR out;
  const Vector w = sym_eigenvalues(g);
  const double top = w.size() ? w.cwiseAbs().maxCoeff() : 0.0;
  if (w.size() == 0 || w.minCoeff() <= 1e-12 * std::max(top, 1e-300)) {
    out.pseudo_inverse = true;
    out.R = solve_linear_lstsq(g, rhs).solution;
  } else {
    out.R = g.ldlt().solve(rhs);
  }
  return out;
}

/// gamma = sqrt(1 - lambda) ||M^{1/2} (B_L R - P Bbar_L)|| / lambda.
inline double gamma_of(const DtSystem& lower, const DtSystem& higher, const LiftPair& lift, const Matrix& M,
                       const Matrix& R, double lambda) {
  const Matrix mis = sym_sqrt(M) * (lower.Bd * R - lift.P * higher.Bd);
  return std::sqrt(1.0 - lambda) * spectral_norm(mis) / lambda;
}

struct SdpSearchOptions {
  double eps_pd = 1e-6;
  double mtilde_bound = 1e3;  ///< cap rho in Mtilde <= rho I
  double bisect_tol = 5e-3;   ///< width of the final bracket on the largest feasible lambda
  int grid_points = 6;
  int golden_iters = 10;
  SdpOptions solver{};
};

struct SdpSearchTrace {
  double lambda_max = 0.0;
  std::map<double, double> gamma_by_lambda;  ///< every feasible lambda evaluated
  int solves = 0;
};

/// SDP certificate. Finds the largest feasible lambda by bisection, then minimizes the
/// downstream gamma over (0, lambda_max] with a coarse grid refined by golden section.
inline Certificate synth_sdp(const DtSystem& lower, const DtSystem& higher, const LiftPair& lift,
                             const SdpSearchOptions& opt = {}, SdpSearchTrace* trace = nullptr) {
  SdpSearchTrace local;
  SdpSearchTrace& tr = trace ? *trace : local;
  std::map<double, Certificate> cache;

  auto solve_at = [&](double lam) -> const Certificate* {
    if (auto it = cache.find(lam); it != cache.end()) return &it->second;
    ++tr.solves;
    const MaxMinEigResult r = sdp_max_min_eig(lower.C, lower.Ad, lower.Bd, lam, opt.eps_pd, opt.mtilde_bound, opt.solver);
    if (!r.feasible) return nullptr;
    Eigen::LLT<Matrix> llt(symmetrize(r.Mtilde));
    if (llt.info() != Eigen::Success) return nullptr;
    Certificate c;
    c.M = symmetrize(llt.solve(Matrix::Identity(lower.n(), lower.n())));
    c.K = r.Ktilde * c.M;
    c.lambda = lam;
    return &cache.emplace(lam, std::move(c)).first->second;
  };
  auto gamma_at = [&](double lam) {
    const Certificate* c = solve_at(lam);
    if (!c) return std::numeric_limits<double>::infinity();
    const OptimalR r = optimal_R(lower, higher, lift, c->M);
    const double g = gamma_of(lower, higher, lift, c->M, r.R, lam);
    tr.gamma_by_lambda[lam] = g;
    return g;
  };

  double lo = 0.0;
  for (double probe : {0.05, 1e-2, 1e-3, 1e-5}) {
    if (solve_at(probe)) {
      lo = probe;
      break;
    }
  }
  require(lo > 0.0, ErrorCode::SdpInfeasible, "the contraction LMIs are infeasible for every trial lambda");
  double hi = 0.5;
  while (hi - lo > opt.bisect_tol) {
    const double mid = 0.5 * (lo + hi);
    if (solve_at(mid))
      lo = mid;
    else
      hi = mid;
  }
  tr.lambda_max = lo;

  const int g_pts = std::max(opt.grid_points, 2);
  std::vector<double> grid;
  for (int i = 1; i <= g_pts; ++i) grid.push_back(lo * static_cast<double>(i) / g_pts);
  std::size_t best = 0;
  std::vector<double> vals;
  for (double lam : grid) vals.push_back(gamma_at(lam));
  for (std::size_t i = 1; i < vals.size(); ++i)
    if (vals[i] < vals[best]) best = i;

  double a = best > 0 ? grid[best - 1] : 0.5 * grid[0];
  double b = best + 1 < grid.size() ? grid[best + 1] : grid[best];
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = gamma_at(x1), f2 = gamma_at(x2);
  for (int it = 0; it < opt.golden_iters; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = gamma_at(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = gamma_at(x2);
    }
  }
  double best_lam = grid[best];
  double best_gamma = vals[best];
  for (const auto& [lam, g] : tr.gamma_by_lambda) {
    if (g < best_gamma) {
      best_gamma = g;
      best_lam = lam;
    }
  }
  return *solve_at(best_lam);
}

struct SynthOptions {
  SynthMethod method = SynthMethod::Sdp;
  double beta = 0.9;
  Matrix lqr_state_weight;
  Matrix lqr_input_weight;
  SdpSearchOptions sdp{};
};

inline SimFunction assemble(const DtSystem& lower, const DtSystem& higher, const SynthOptions& opt = {}) {
  SimFunction sf;
  sf.lift = solve_lift(lower, higher);
  const Certificate cert = opt.method == SynthMethod::Lyapunov
                               ? synth_lyapunov(lower, opt.beta, opt.lqr_state_weight, opt.lqr_input_weight)
                               : synth_sdp(lower, higher, sf.lift, opt.sdp);
  sf.M = cert.M;
  sf.K = cert.K;
  sf.lambda = cert.lambda;
  sf.method = opt.method;
  const OptimalR r = optimal_R(lower, higher, sf.lift, sf.M);
  sf.R = r.R;
  sf.R_pseudo_inverse = r.pseudo_inverse;
  sf.gamma = gamma_of(lower, higher, sf.lift, sf.M, sf.R, sf.lambda);
  return sf;
}

struct LmiSlack {
  double output = 0.0;  ///< min eig(M - C'C); must be >= -1e-8
  double decay = 0.0;   ///< max eig(A_cl' M A_cl - (1 - 2 lambda) M); must be <= 1e-8
  bool ok(double tol = 1e-8) const { return output >= -tol && decay <= tol; }
};

inline LmiSlack lmi_slack(const SimFunction& sf, const DtSystem& lower) {
  LmiSlack s;
  s.output = min_sym_eigenvalue(sf.M - lower.C.transpose() * lower.C);
  const Matrix a_cl = lower.Ad + lower.Bd * sf.K;
  s.decay = max_sym_eigenvalue(a_cl.transpose() * sf.M * a_cl - (1.0 - 2.0 * sf.lambda) * sf.M);
  return s;
}

inline double eval_V(const SimFunction& sf, const Vector& xbar, const Vector& x) {
  const Vector d = x - sf.lift.P * xbar;
  return std::max(0.0, d.dot(sf.M * d));
}

inline Vector eval_controller(const SimFunction& sf, const Vector& ubar, const Vector& xbar, const Vector& x) {
  return sf.R * ubar + sf.lift.Q * xbar + sf.K * (x - sf.lift.P * xbar);
}

/// epsilon = max(v0_max, gamma * u_bar_max); v0_max is already max sqrt(V) over the initial set.
inline Precision compute_precision(const SimFunction& sf, double u_bar_max, double v0_max) {
  require(u_bar_max > 0.0, ErrorCode::InvalidArgument, "u_bar_max must be positive");
  require(v0_max >= 0.0, ErrorCode::InvalidArgument, "v0_max must be non-negative");
  return Precision{std::max(v0_max, sf.gamma * u_bar_max), u_bar_max, v0_max};
}

}  // namespace layercon
