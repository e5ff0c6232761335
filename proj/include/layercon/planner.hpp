#pragma once

// Linear MPC planner for the higher layer and a waypoint cursor for multi-piece missions.

#include <optional>
#include <vector>

#include "layercon/propagation.hpp"
#include "layercon/qp.hpp"

namespace layercon {

struct PlannerConfig {
  int horizon = 10;
  Matrix state_weight;     ///< nbar x nbar; identity when empty
  Matrix input_weight;     ///< mbar x mbar; identity when empty
  Matrix terminal_weight;  ///< nbar x nbar; 10 I when empty
  double waypoint_switch_radius = 0.3;
  double qp_tol = 1e-8;
};

struct PlanResult {
  Vector ubar;             ///< first input of the plan
  Vector inputs;           ///< stacked plan (horizon * mbar)
  Matrix states;           ///< nbar x horizon predicted states x_1..x_N
  double value = 0.0;      ///< optimal cost, including the constant term
  double kkt_residual = 0.0;
};

/// State with output `target` that is an equilibrium under zero input.
inline Vector output_equilibrium(const DtSystem& sys, const Vector& target) {
  const Eigen::Index n = sys.n();
  Matrix a(sys.p() + n, n);
  a << sys.C, sys.Ad - Matrix::Identity(n, n);
  Vector b = Vector::Zero(sys.p() + n);
  b.head(sys.p()) = target;
  return solve_linear_lstsq(a, b).solution;
}

namespace detail {

inline Matrix weight_or(const Matrix& w, Eigen::Index n, double diag) {
  if (w.size() == 0) return diag * Matrix::Identity(n, n);
  require(w.rows() == n && w.cols() == n, ErrorCode::DimensionMismatch, "planner weight has shape " + shape(w));
  require(min_sym_eigenvalue(w) >= -1e-12, ErrorCode::InvalidArgument, "planner weights must be PSD");
  return symmetrize(w);
}

}  // namespace detail

/// One receding-horizon step: minimize
///   sum_{k=1}^{N-1} |x_k - x_ref|^2_Ws + |x_N - x_ref|^2_Wt + sum_{k=0}^{N-1} |u_k|^2_Wu
/// over the Sigma_H dynamics with Xp rows on x_1..x_N and Up rows on u_0..u_{N-1}.
inline PlanResult plan_step(const Vector& xbar, const Vector& target, const PlanningSets& ps, const DtSystem& sys_h,
                            const PlannerConfig& cfg) {
  require(cfg.horizon >= 1, ErrorCode::InvalidArgument, "planner horizon must be at least 1");
  const Eigen::Index n = sys_h.n(), m = sys_h.m(), N = cfg.horizon;
  require(xbar.size() == n && target.size() == sys_h.p(), ErrorCode::DimensionMismatch, "plan_step: state/target size");
  require(ps.Xp.dim() == n && ps.Up.dim() == m, ErrorCode::DimensionMismatch, "plan_step: planning sets do not match Sigma_H");
  const double start_slack = ps.Xp.min_slack(xbar);
  require(start_slack >= -1e-6, ErrorCode::PlannerInfeasible,
          "initial higher state lies outside the planning set (slack " + std::to_string(start_slack) + ")");

  const Matrix ws = detail::weight_or(cfg.state_weight, n, 1.0);
  const Matrix wt = detail::weight_or(cfg.terminal_weight, n, 10.0);
  const Matrix wu = detail::weight_or(cfg.input_weight, m, 1.0);
  const Vector xref = output_equilibrium(sys_h, target);

  // x_k = Phi_k xbar + Gamma_k U for k = 1..N.
  std::vector<Matrix> phi(static_cast<std::size_t>(N));
  Matrix gamma = Matrix::Zero(n * N, m * N);
  Matrix apow = sys_h.Ad;
  for (Eigen::Index k = 0; k < N; ++k) {
    phi[static_cast<std::size_t>(k)] = apow;
    apow = sys_h.Ad * apow;
    Matrix blk = sys_h.Bd;
    for (Eigen::Index i = k; i >= 0; --i) {
      gamma.block(k * n, i * m, n, m) = blk;
      blk = sys_h.Ad * blk;
    }
  }

  QpProblem qp;
  qp.H = Matrix::Zero(m * N, m * N);
  qp.g = Vector::Zero(m * N);
  double constant = 0.0;
  for (Eigen::Index k = 0; k < N; ++k) {
    const Matrix& w = k + 1 == N ? wt : ws;
    const Matrix gk = gamma.middleRows(k * n, n);
    const Vector off = phi[static_cast<std::size_t>(k)] * xbar - xref;
    qp.H += gk.transpose() * w * gk;
    qp.g += gk.transpose() * w * off;
    constant += off.dot(w * off);
    qp.H.block(k * m, k * m, m, m) += wu;
  }
  qp.H = symmetrize(2.0 * qp.H);
  qp.g *= 2.0;

  const Eigen::Index rx = ps.Xp.rows(), ru = ps.Up.rows();
  qp.Fineq = Matrix::Zero(N * (rx + ru), m * N);
  qp.hineq = Vector::Zero(N * (rx + ru));
  for (Eigen::Index k = 0; k < N; ++k) {
    qp.Fineq.block(k * rx, 0, rx, m * N) = ps.Xp.F * gamma.middleRows(k * n, n);
    qp.hineq.segment(k * rx, rx) = ps.Xp.f - ps.Xp.F * phi[static_cast<std::size_t>(k)] * xbar;
    qp.Fineq.block(N * rx + k * ru, k * m, ru, m) = ps.Up.F;
    qp.hineq.segment(N * rx + k * ru, ru) = ps.Up.f;
  }

  const QpResult sol = solve_qp(qp, cfg.qp_tol, 200);
  require(sol.status != QpStatus::Infeasible, ErrorCode::PlannerInfeasible, "MPC problem is infeasible");
  require(sol.status == QpStatus::Optimal || sol.kkt_residual <= 1e-6, ErrorCode::PlannerInfeasible,
          "MPC solve did not converge (KKT residual " + std::to_string(sol.kkt_residual) + ")");
  PlanResult out;
  out.inputs = sol.x;
  out.ubar = sol.x.head(m);
  out.value = sol.objective + constant;
  out.kkt_residual = sol.kkt_residual;
  out.states.resize(n, N);
  const Vector xs = gamma * sol.x;
  for (Eigen::Index k = 0; k < N; ++k) out.states.col(k) = phi[static_cast<std::size_t>(k)] * xbar + xs.segment(k * n, n);
  return out;
}

struct Mission {
  std::vector<Vector> waypoints;
  std::vector<int> piece_of_waypoint;
  Vector goal_center;
  double goal_radius = 0.25;
  int goal_piece = 0;

  bool operator==(const Mission& o) const {
    if (waypoints.size() != o.waypoints.size()) return false;
    for (std::size_t i = 0; i < waypoints.size(); ++i)
      if (!same(waypoints[i], o.waypoints[i])) return false;
    return piece_of_waypoint == o.piece_of_waypoint && same(goal_center, o.goal_center) &&
           goal_radius == o.goal_radius && goal_piece == o.goal_piece;
  }
};

struct MissionCursor {
  std::size_t next = 0;  ///< index of the waypoint currently targeted
};

struct MissionStatus {
  Vector target;
  int piece = 0;
  bool done = false;
};

/// Advances past every waypoint within `switch_radius` of ybar, then reports the active
/// target, its piece, and whether ybar is inside the goal disk.
inline MissionStatus advance_mission(const Mission& m, MissionCursor& cur, const Vector& ybar, double switch_radius) {
  require(m.waypoints.size() == m.piece_of_waypoint.size(), ErrorCode::InvalidArgument,
          "every waypoint needs a piece index");
  while (cur.next < m.waypoints.size() && (ybar - m.waypoints[cur.next]).norm() <= switch_radius) ++cur.next;
  MissionStatus s;
  if (cur.next < m.waypoints.size()) {
    s.target = m.waypoints[cur.next];
    s.piece = m.piece_of_waypoint[cur.next];
  } else {
    s.target = m.goal_center;
    s.piece = m.goal_piece;
  }
  s.done = (ybar - m.goal_center).norm() <= m.goal_radius;
  return s;
}

/// Checks that each piece handoff waypoint lies in both pieces' tightened output sets,
/// and that the goal center lies in the goal piece's. Returns a message for the first
/// violation.
inline std::optional<std::string> validate_mission(const Mission& m, const SafeRegion& y, double eps) {
  auto tightened_contains = [&](int piece, const Vector& pt) {
    const HPolytope& p = y.pieces[static_cast<std::size_t>(piece)];
    return p.min_slack(pt) >= eps - 1e-9;
  };
  auto piece_ok = [&](int piece) { return piece >= 0 && static_cast<std::size_t>(piece) < y.pieces.size(); };
  for (std::size_t i = 0; i < m.waypoints.size(); ++i) {
    const int pc = m.piece_of_waypoint[i];
    if (!piece_ok(pc)) return "waypoint " + std::to_string(i) + " names a missing piece";
    if (!tightened_contains(pc, m.waypoints[i]))
      return "waypoint " + std::to_string(i) + " is outside the tightened output set of its piece";
    const int nxt = i + 1 < m.waypoints.size() ? m.piece_of_waypoint[i + 1] : m.goal_piece;
    if (!piece_ok(nxt)) return "goal names a missing piece";
    if (nxt != pc && !tightened_contains(nxt, m.waypoints[i]))
      return "handoff waypoint " + std::to_string(i) + " is outside the tightened output set of piece " +
             std::to_string(nxt);
  }
  if (!piece_ok(m.goal_piece)) return "goal names a missing piece";
  if (!tightened_contains(m.goal_piece, m.goal_center)) return "goal center is outside the tightened goal piece";
  return std::nullopt;
}

}  // namespace layercon
