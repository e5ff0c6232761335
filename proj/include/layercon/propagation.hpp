#pragma once

// Tightening of the higher-layer constraint sets so that any plan respecting them keeps
// the lower layer inside its output and input constraints.

#include <cstdlib>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "layercon/polytope.hpp"
#include "layercon/simfunc.hpp"

namespace layercon {

/// Xbar ∩ {x : F_y Cbar x <= f_y - eps ||F_y,j||}. Output rows come after the Xbar rows.
inline HPolytope tighten_output(const HPolytope& y, const Matrix& cbar, const std::optional<HPolytope>& xbar, double eps) {
  require(eps >= 0.0, ErrorCode::InvalidArgument, "epsilon must be non-negative");
  require(y.dim() == cbar.rows(), ErrorCode::DimensionMismatch, "output set dimension does not match Cbar");
  Vector shrink(y.rows());
  for (Eigen::Index j = 0; j < y.rows(); ++j) shrink(j) = eps * y.F.row(j).norm();
  HPolytope out(y.F * cbar, y.f - shrink);
  if (xbar) {
    require(xbar->dim() == cbar.cols(), ErrorCode::DimensionMismatch, "Xbar dimension does not match Cbar");
    return xbar->intersect(out);
  }
  return out;
}

/// Ubar ∩ {u : F_u R u <= f_u - delta ||F_u,j||_1 - eps ||G_u,j||} with G_u = F_u K M^{-1/2}.
/// Tightened rows come first, then Ubar's rows.
inline HPolytope tighten_input(const HPolytope& u, const Matrix& r, const Matrix& k, const Matrix& m, double eps,
                               double delta, const std::optional<HPolytope>& ubar = std::nullopt) {
  require(eps >= 0.0 && delta >= 0.0, ErrorCode::InvalidArgument, "epsilon and delta must be non-negative");
  require(u.dim() == r.rows() && k.rows() == r.rows() && k.cols() == m.rows(), ErrorCode::DimensionMismatch,
          "tighten_input: inconsistent U, R, K, M shapes");
  const Matrix g = u.F * k * sym_inv_sqrt(m);
  Vector rhs = u.f;
  for (Eigen::Index j = 0; j < u.rows(); ++j) rhs(j) -= delta * u.F.row(j).lpNorm<1>() + eps * g.row(j).norm();
  HPolytope out(u.F * r, rhs);
  if (ubar) {
    require(ubar->dim() == r.cols(), ErrorCode::DimensionMismatch, "Ubar dimension does not match R");
    return out.intersect(*ubar);
  }
  return out;
}

struct PlanningSets {
  HPolytope Xp;
  HPolytope Up;
  double epsilon = 0.0;
  double delta = 0.0;
  double u_bar_max = 0.0;
  double v0_max = 0.0;
};

struct PropagationOptions {
  std::optional<double> delta;      ///< required when Q != 0; defaults to 0 otherwise
  std::optional<double> u_bar_max;  ///< pin instead of solving for self-consistency
  std::optional<double> epsilon;    ///< pin epsilon directly (u_bar_max then follows from Up)
  double v0_max = 0.0;
  bool propagation = true;          ///< false: plain intersections, no shrink (failure demos)
};

inline bool lift_has_feedforward_state(const SimFunction& sf) {
  return sf.lift.Q.size() > 0 && sf.lift.Q.cwiseAbs().maxCoeff() > 1e-12;
}

namespace detail {

inline double resolve_delta(const SimFunction& sf, const PropagationOptions& opt) {
  if (opt.delta) {
    require(*opt.delta >= 0.0, ErrorCode::InvalidArgument, "delta must be non-negative");
    return *opt.delta;
  }
  require(!lift_has_feedforward_state(sf), ErrorCode::InvalidArgument,
          "the lift has Q != 0, so a delta bound on ||Q xbar|| must be given");
  return 0.0;
}

inline HPolytope append_q_rows(const HPolytope& xp, const Matrix& q, double delta) {
  Matrix F(2 * q.rows(), q.cols());
  F << q, -q;
  return xp.intersect(HPolytope(F, Vector::Constant(2 * q.rows(), delta)));
}

// Largest norm over Up(eps); -inf when Up is empty.
inline double up_norm(const HPolytope& up) {
  if (up.is_empty()) return -std::numeric_limits<double>::infinity();
  return max_norm_over(up);
}

}  // namespace detail

struct InputSolution {
  HPolytope Up;
  double epsilon = 0.0;
  double u_bar_max = 0.0;
  double delta = 0.0;
};

/// Solves for the input-side quantities shared by every piece: Up, epsilon, u_bar_max.
///
/// Without pins, u_bar_max is the smallest u with u >= phi(u), where phi(u) is the
/// largest norm over Up(max(v0, gamma u)); phi is non-increasing, so the crossing is
/// found by bisection on [0, phi(0)].
inline InputSolution solve_input_side(const SimFunction& sf, const HPolytope& u, const HPolytope& ubar,
                                      const PropagationOptions& opt) {
  InputSolution s;
  s.delta = detail::resolve_delta(sf, opt);
  const double v0 = opt.v0_max;
  auto up_at = [&](double eps) { return tighten_input(u, sf.R, sf.K, sf.M, eps, s.delta, ubar); };

  if (!opt.propagation) {
    s.Up = ubar;
    s.u_bar_max = max_norm_over(ubar);
    s.epsilon = opt.epsilon.value_or(std::max(v0, sf.gamma * s.u_bar_max));
    return s;
  }
  if (opt.epsilon) {
    s.epsilon = *opt.epsilon;
    s.Up = up_at(s.epsilon);
    require(!s.Up.is_empty(), ErrorCode::EmptyPlanningSet, "tightened input set is empty at the pinned epsilon");
    s.u_bar_max = max_norm_over(s.Up);
    return s;
  }
  if (opt.u_bar_max) {
    require(*opt.u_bar_max > 0.0, ErrorCode::InvalidArgument, "pinned u_bar_max must be positive");
    s.u_bar_max = *opt.u_bar_max;
    s.epsilon = std::max(v0, sf.gamma * s.u_bar_max);
    s.Up = up_at(s.epsilon);
    require(!s.Up.is_empty(), ErrorCode::EmptyPlanningSet, "tightened input set is empty at the pinned u_bar_max");
    const double need = max_norm_over(s.Up);
    require(s.u_bar_max >= need - 1e-9, ErrorCode::InvalidArgument,
            "pinned u_bar_max " + std::to_string(s.u_bar_max) + " is below the largest planned input norm " +
                std::to_string(need));
    return s;
  }
  const double phi0 = detail::up_norm(up_at(v0));
  require(std::isfinite(phi0), ErrorCode::EmptyPlanningSet, "tightened input set is empty even at epsilon = v0_max");
  double lo = 0.0, hi = phi0;
  if (phi0 > 0.0) {
    for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, phi0); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid >= detail::up_norm(up_at(std::max(v0, sf.gamma * mid))))
        hi = mid;
      else
        lo = mid;
    }
  }
  s.u_bar_max = hi;
  s.epsilon = std::max(v0, sf.gamma * hi);
  s.Up = up_at(s.epsilon);
  require(!s.Up.is_empty(), ErrorCode::EmptyPlanningSet, "no self-consistent u_bar_max leaves the input set nonempty");
  if (!(s.u_bar_max > 0.0)) s.u_bar_max = std::max(max_norm_over(s.Up), 1e-300);
  return s;
}

/// Output-side set for one piece, given the input-side solution.
inline HPolytope planning_state_set(const SimFunction& sf, const Matrix& cbar, const HPolytope& y_piece,
                                    const std::optional<HPolytope>& xbar, const InputSolution& in, bool propagation) {
  HPolytope xp = tighten_output(y_piece, cbar, xbar, propagation ? in.epsilon : 0.0);
  if (lift_has_feedforward_state(sf)) xp = detail::append_q_rows(xp, sf.lift.Q, in.delta);
  return xp;
}

/// Planning sets for a single output piece. Throws EmptyPlanningSet naming the piece.
inline PlanningSets build_planning_sets(const SimFunction& sf, const Matrix& cbar, const HPolytope& y_piece,
                                        const HPolytope& u, const std::optional<HPolytope>& xbar, const HPolytope& ubar,
                                        const PropagationOptions& opt = {}, int piece_index = 0) {
  const InputSolution in = solve_input_side(sf, u, ubar, opt);
  PlanningSets ps{planning_state_set(sf, cbar, y_piece, xbar, in, opt.propagation), in.Up, in.epsilon, in.delta,
                  in.u_bar_max, opt.v0_max};
  require(!ps.Xp.is_empty(), ErrorCode::EmptyPlanningSet,
          "planning state set of piece " + std::to_string(piece_index) + " is empty at epsilon " +
              std::to_string(ps.epsilon));
  return ps;
}

/// Per-piece planning sets over a union of output pieces. Empty pieces are flagged, not thrown.
struct PlanningBundle {
  std::vector<PlanningSets> pieces;
  std::vector<bool> empty;
  double epsilon = 0.0;
  double delta = 0.0;
  double u_bar_max = 0.0;
  double v0_max = 0.0;

  std::optional<std::size_t> first_empty() const {
    for (std::size_t i = 0; i < empty.size(); ++i)
      if (empty[i]) return i;
    return std::nullopt;
  }

  void require_nonempty() const {
    if (auto i = first_empty())
      throw Error(ErrorCode::EmptyPlanningSet, "planning state set of piece " + std::to_string(*i) +
                                                   " is empty at epsilon " + std::to_string(epsilon));
  }
};

inline PlanningBundle build_planning_bundle(const SimFunction& sf, const Matrix& cbar, const SafeRegion& y,
                                            const HPolytope& u, const std::optional<HPolytope>& xbar,
                                            const HPolytope& ubar, const PropagationOptions& opt = {}) {
  const InputSolution in = solve_input_side(sf, u, ubar, opt);
  PlanningBundle b;
  b.epsilon = in.epsilon;
  b.delta = in.delta;
  b.u_bar_max = in.u_bar_max;
  b.v0_max = opt.v0_max;
  for (const auto& piece : y.pieces) {
    PlanningSets ps{planning_state_set(sf, cbar, piece, xbar, in, opt.propagation), in.Up, in.epsilon, in.delta,
                    in.u_bar_max, opt.v0_max};
    b.empty.push_back(ps.Xp.is_empty());
    b.pieces.push_back(std::move(ps));
  }
  return b;
}

inline std::uint64_t default_seed() {
  if (const char* s = std::getenv("LAYERCON_SEED")) {
    try {
      return std::stoull(s);
    } catch (...) {
    }
  }
  return 20240917ULL;
}

struct PropagationReport {
  bool pass = true;
  double output_margin = std::numeric_limits<double>::infinity();  ///< worst normalized slack in Y
  double input_margin = std::numeric_limits<double>::infinity();   ///< worst normalized slack in U
  int output_row = -1;  ///< row of Y attaining the worst output margin
  int input_row = -1;   ///< row of U attaining the worst input margin
  long output_samples = 0;
  long input_samples = 0;
};

namespace detail {

inline Vector unit_sample(std::mt19937_64& rng, Eigen::Index k) {
  std::normal_distribution<double> nd;
  Vector v(k);
  do {
    for (Eigen::Index i = 0; i < k; ++i) v(i) = nd(rng);
  } while (v.norm() < 1e-12);
  return v / v.norm();
}

// Points of a polytope: its vertices (when cheap) plus boundary points reached by
// shooting rays from the Chebyshev center. Unbounded rays are clipped at `clip`.
inline std::vector<Vector> boundary_samples(const HPolytope& p, long n, std::mt19937_64& rng, double clip = 1e3) {
  std::vector<Vector> pts;
  if (p.dim() <= 4 && p.rows() <= 24) pts = enumerate_vertices(p);
  const FeasibilityResult c = p.feasibility();
  if (!c.feasible) return pts;
  const Vector center = c.witness;
  pts.push_back(center);
  while (static_cast<long>(pts.size()) < n) {
    const Vector d = unit_sample(rng, p.dim());
    double t = clip;
    for (Eigen::Index j = 0; j < p.rows(); ++j) {
      const double fd = p.F.row(j).dot(d);
      if (fd > 1e-14) t = std::min(t, (p.f(j) - p.F.row(j).dot(center)) / fd);
    }
    pts.push_back(center + std::max(t, 0.0) * d);
  }
  return pts;
}

inline void worst_row(const HPolytope& p, const Vector& z, double& margin, int& row) {
  for (Eigen::Index j = 0; j < p.rows(); ++j) {
    const double s = p.row_slack(j, z);
    if (s < margin) {
      margin = s;
      row = static_cast<int>(j);
    }
  }
}

}  // namespace detail

/// Sampling check that Cbar xbar + eps e stays in Y and R ubar + Q xbar + eps K M^{-1/2} e
/// stays in U for sampled xbar in Xp, ubar in Up and unit e. Each condition gets
/// `n_samples` random samples plus the row-wise worst-case directions.
inline PropagationReport check_propagation_conditions(const SimFunction& sf, const Matrix& cbar, const PlanningSets& ps,
                                                      const HPolytope& y_piece, const HPolytope& u, long n_samples,
                                                      std::uint64_t seed = default_seed(), double tol = 1e-9) {
  PropagationReport rep;
  std::mt19937_64 rng(seed);
  const double eps = ps.epsilon;
  const long pool = std::max<long>(64, n_samples / 16);
  const auto xs = detail::boundary_samples(ps.Xp, pool, rng);
  const auto us = detail::boundary_samples(ps.Up, pool, rng);
  std::uniform_int_distribution<std::size_t> pick_x(0, xs.size() - 1), pick_u(0, us.size() - 1);

  // Output condition.
  const Eigen::Index p = y_piece.dim();
  for (const auto& xb : xs) {
    const Vector yb = cbar * xb;
    for (Eigen::Index j = 0; j < y_piece.rows(); ++j) {
      const double nrm = y_piece.F.row(j).norm();
      if (nrm == 0) continue;
      const Vector e = y_piece.F.row(j).transpose() / nrm;
      detail::worst_row(y_piece, yb + eps * e, rep.output_margin, rep.output_row);
      ++rep.output_samples;
    }
  }
  for (long s = 0; s < n_samples; ++s) {
    const Vector e = detail::unit_sample(rng, p);
    detail::worst_row(y_piece, cbar * xs[pick_x(rng)] + eps * e, rep.output_margin, rep.output_row);
    ++rep.output_samples;
  }

  // Input condition.
  const Matrix kmi = sf.K * sym_inv_sqrt(sf.M);
  const Matrix g = u.F * kmi;
  auto input_point = [&](const Vector& ub, const Vector& xb, const Vector& e) {
    return Vector(sf.R * ub + sf.lift.Q * xb + eps * kmi * e);
  };
  for (const auto& ub : us) {
    const Vector& xb = xs[pick_x(rng)];
    for (Eigen::Index j = 0; j < u.rows(); ++j) {
      const double nrm = g.row(j).norm();
      const Vector e = nrm > 0 ? Vector(g.row(j).transpose() / nrm) : Vector(Vector::Zero(kmi.cols()));
      detail::worst_row(u, input_point(ub, xb, e), rep.input_margin, rep.input_row);
      ++rep.input_samples;
    }
  }
  for (long s = 0; s < n_samples; ++s) {
    const Vector e = detail::unit_sample(rng, kmi.cols());
    detail::worst_row(u, input_point(us[pick_u(rng)], xs[pick_x(rng)], e), rep.input_margin, rep.input_row);
    ++rep.input_samples;
  }
  rep.pass = rep.output_margin >= -tol && rep.input_margin >= -tol;
  return rep;
}

}  // namespace layercon
