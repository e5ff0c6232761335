#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "layercon/lp.hpp"

namespace layercon {

/// {z : F z <= f}
struct HPolytope {
  Matrix F;
  Vector f;

  HPolytope() = default;
  HPolytope(Matrix F_, Vector f_) : F(std::move(F_)), f(std::move(f_)) {
    require(F.rows() >= 1, ErrorCode::InvalidArgument, "a polytope needs at least one halfspace");
    require(F.rows() == f.size(), ErrorCode::DimensionMismatch,
            "halfspace matrix " + shape(F) + " does not match bound vector of size " + std::to_string(f.size()));
    require(all_finite(F) && all_finite(f), ErrorCode::InvalidArgument, "halfspace data must be finite");
  }

  static HPolytope box(const Vector& lo, const Vector& hi) {
    require(lo.size() == hi.size() && lo.size() > 0, ErrorCode::DimensionMismatch, "box bounds must match in size");
    const Eigen::Index k = lo.size();
    Matrix F(2 * k, k);
    F << Matrix::Identity(k, k), -Matrix::Identity(k, k);
    Vector f(2 * k);
    f << hi, -lo;
    return HPolytope(F, f);
  }

  Eigen::Index dim() const { return F.cols(); }
  Eigen::Index rows() const { return F.rows(); }

  /// Row-normalized slack; non-negative iff z satisfies the row. Zero rows report f_j itself.
  double row_slack(Eigen::Index j, const Vector& z) const {
    const double nrm = F.row(j).norm();
    const double raw = f(j) - F.row(j).dot(z);
    return nrm > 0 ? raw / nrm : raw;
  }

  double min_slack(const Vector& z) const {
    require(z.size() == dim(), ErrorCode::DimensionMismatch, "point has dimension " + std::to_string(z.size()) +
                                                                 ", polytope has " + std::to_string(dim()));
    double s = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < rows(); ++j) s = std::min(s, row_slack(j, z));
    return s;
  }

  bool contains(const Vector& z, double tol = 1e-9) const { return min_slack(z) >= -tol; }

  HPolytope intersect(const HPolytope& o) const {
    require(o.dim() == dim(), ErrorCode::DimensionMismatch, "cannot intersect polytopes of different dimension");
    Matrix F2(rows() + o.rows(), dim());
    F2 << F, o.F;
    Vector f2(rows() + o.rows());
    f2 << f, o.f;
    return HPolytope(F2, f2);
  }

  FeasibilityResult feasibility() const { return solve_lp_feasibility(F, f); }
  bool is_empty() const { return !feasibility().feasible; }

  bool operator==(const HPolytope& o) const { return same(F, o.F) && same(f, o.f); }
};

/// Union of polytopes, e.g. the rectangles covering a maze's free space.
struct SafeRegion {
  std::vector<HPolytope> pieces;

  SafeRegion() = default;
  explicit SafeRegion(std::vector<HPolytope> p) : pieces(std::move(p)) {
    require(!pieces.empty(), ErrorCode::InvalidArgument, "a safe region needs at least one piece");
    for (const auto& q : pieces)
      require(q.dim() == pieces.front().dim(), ErrorCode::DimensionMismatch, "safe-region pieces differ in dimension");
  }

  Eigen::Index dim() const { return pieces.front().dim(); }
  bool operator==(const SafeRegion&) const = default;
};

struct Membership {
  bool inside = false;
  double margin = -std::numeric_limits<double>::infinity();
};

inline Membership membership(const HPolytope& p, const Vector& z, double tol = 1e-12) {
  Membership m;
  m.margin = p.min_slack(z);
  m.inside = m.margin >= -tol;
  return m;
}

inline Membership membership(const SafeRegion& r, const Vector& z, double tol = 1e-12) {
  Membership m;
  for (const auto& p : r.pieces) m.margin = std::max(m.margin, p.min_slack(z));
  m.inside = m.margin >= -tol;
  return m;
}

/// True when every coordinate is bounded above and below (2k LP probes). The polytope
/// must be nonempty.
inline bool is_bounded(const HPolytope& p) {
  const Eigen::Index k = p.dim();
  for (Eigen::Index i = 0; i < k; ++i) {
    for (double sgn : {1.0, -1.0}) {
      Vector c = Vector::Zero(k);
      c(i) = -sgn;
      const LpResult r = solve_lp(c, p.F, p.f);
      if (r.status == LpStatus::Unbounded) return false;
      require(r.status == LpStatus::Optimal, ErrorCode::NonConvergence,
              std::string("boundedness probe ended with status ") + to_string(r.status));
    }
  }
  return true;
}

/// Vertices by intersecting every k-subset of halfspaces and keeping the feasible points.
inline std::vector<Vector> enumerate_vertices(const HPolytope& p, double tol = 1e-9) {
  const Eigen::Index k = p.dim();
  const Eigen::Index d = p.rows();
  std::vector<Vector> out;
  if (d < k) return out;
  const double scale = 1.0 + p.f.cwiseAbs().maxCoeff();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  Matrix a(k, k);
  Vector b(k);
  while (true) {
    for (Eigen::Index i = 0; i < k; ++i) {
      a.row(i) = p.F.row(idx[static_cast<std::size_t>(i)]);
      b(i) = p.f(idx[static_cast<std::size_t>(i)]);
    }
    Eigen::FullPivLU<Matrix> lu(a);
    lu.setThreshold(1e-10);
    if (lu.rank() == k) {
      const Vector v = lu.solve(b);
      if (v.allFinite() && ((p.F * v - p.f).maxCoeff() <= tol * scale)) {
        bool dup = false;
        for (const auto& w : out)
          if ((w - v).cwiseAbs().maxCoeff() <= 1e-9 * scale) {
            dup = true;
            break;
          }
        if (!dup) out.push_back(v);
      }
    }
    // Next combination in lexicographic order.
    Eigen::Index i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == d - k + i) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (Eigen::Index j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  return out;
}

/// Exact max Euclidean norm over a bounded, nonempty polytope.
inline double max_norm_over(const HPolytope& p) {
  require(!p.is_empty(), ErrorCode::EmptyPlanningSet, "max_norm_over: polytope is empty");
  require(is_bounded(p), ErrorCode::Unbounded, "max_norm_over: polytope is unbounded");
  const auto verts = enumerate_vertices(p);
  require(!verts.empty(), ErrorCode::NonConvergence, "max_norm_over: no vertices found for a bounded polytope");
  double best = 0.0;
  for (const auto& v : verts) best = std::max(best, v.norm());
  return best;
}

}  // namespace layercon
