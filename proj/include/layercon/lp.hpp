#pragma once

// Dense two-phase simplex for small linear programs, plus the Chebyshev-center
// feasibility test built on it.

#include <limits>
#include <vector>

#include "layercon/core.hpp"

namespace layercon {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Vector x;
  double objective = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

class SimplexTableau {
 public:
  SimplexTableau(Eigen::Index rows, Eigen::Index cols) : t_(Matrix::Zero(rows + 1, cols + 1)), basis_(rows, -1) {}

  Matrix& table() { return t_; }
  std::vector<Eigen::Index>& basis() { return basis_; }
  Eigen::Index rows() const { return t_.rows() - 1; }
  Eigen::Index cols() const { return t_.cols() - 1; }
  double& rhs(Eigen::Index r) { return t_(r, cols()); }
  double& cost(Eigen::Index c) { return t_(rows(), c); }

  void pivot(Eigen::Index r, Eigen::Index c) {
    t_.row(r) /= t_(r, c);
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i == r) continue;
      const double factor = t_(i, c);
      if (factor != 0.0) t_.row(i) -= factor * t_.row(r);
    }
    basis_[static_cast<std::size_t>(r)] = c;
  }

  // Bland's rule over the columns flagged in `allowed`. Returns the final status.
  LpStatus run(const std::vector<bool>& allowed, int max_iter, double tol) {
    for (int it = 0; it < max_iter; ++it) {
      Eigen::Index enter = -1;
      for (Eigen::Index c = 0; c < cols(); ++c) {
        if (allowed[static_cast<std::size_t>(c)] && cost(c) < -tol) {
          enter = c;
          break;
        }
      }
      if (enter < 0) return LpStatus::Optimal;
      Eigen::Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index r = 0; r < rows(); ++r) {
        const double a = t_(r, enter);
        if (a > tol) {
          const double ratio = rhs(r) / a;
          if (ratio < best - 1e-12 ||
              (ratio <= best + 1e-12 && leave >= 0 && basis_[static_cast<std::size_t>(r)] < basis_[static_cast<std::size_t>(leave)])) {
            best = ratio;
            leave = r;
          }
        }
      }
      if (leave < 0) return LpStatus::Unbounded;
      pivot(leave, enter);
    }
    return LpStatus::IterationLimit;
  }

 private:
  Matrix t_;
  std::vector<Eigen::Index> basis_;
};

}  // namespace detail

/// minimize c^T x  subject to  A x <= b,  E x = e,  x free.
inline LpResult solve_lp(const Vector& c, const Matrix& a, const Vector& b, const Matrix& e_mat = Matrix(),
                         const Vector& e_vec = Vector(), int max_iter = 0) {
  const Eigen::Index n = c.size();
  const Matrix eq = e_mat.size() == 0 ? Matrix(0, n) : e_mat;
  const Vector eqv = e_vec.size() == 0 ? Vector(0) : e_vec;
  const Matrix in = a.size() == 0 ? Matrix(0, n) : a;
  const Vector inv = b.size() == 0 ? Vector(0) : b;
  require(in.cols() == n && in.rows() == inv.size(), ErrorCode::DimensionMismatch, "LP inequality block has wrong shape");
  require(eq.cols() == n && eq.rows() == eqv.size(), ErrorCode::DimensionMismatch, "LP equality block has wrong shape");
  require(all_finite(c) && all_finite(in) && all_finite(inv) && all_finite(eq) && all_finite(eqv),
          ErrorCode::InvalidArgument, "LP data has non-finite entries");

  const Eigen::Index mi = in.rows();
  const Eigen::Index me = eq.rows();
  const Eigen::Index m = mi + me;
  // Columns: x+ (n), x- (n), slacks (mi), artificials (m).
  const Eigen::Index n_struct = 2 * n + mi;
  const Eigen::Index n_cols = n_struct + m;
  if (max_iter <= 0) max_iter = static_cast<int>(50 * (m + n_cols) + 100);
  constexpr double tol = 1e-10;

  detail::SimplexTableau tab(m, n_cols);
  Matrix& t = tab.table();
  for (Eigen::Index r = 0; r < m; ++r) {
    const bool is_eq = r >= mi;
    const auto row = is_eq ? eq.row(r - mi) : in.row(r);
    double rhs = is_eq ? eqv(r - mi) : inv(r);
    const double sign = rhs < 0 ? -1.0 : 1.0;
    t.block(r, 0, 1, n) = sign * row;
    t.block(r, n, 1, n) = -sign * row;
    if (!is_eq) t(r, 2 * n + r) = sign;
    t(r, n_struct + r) = 1.0;
    tab.rhs(r) = sign * rhs;
    tab.basis()[static_cast<std::size_t>(r)] = n_struct + r;
  }
  // Slack columns with a +1 coefficient can start in the basis directly.
  for (Eigen::Index r = 0; r < mi; ++r) {
    if (t(r, 2 * n + r) > 0) tab.basis()[static_cast<std::size_t>(r)] = 2 * n + r;
  }

  // Phase 1: minimize the sum of basic artificials.
  for (Eigen::Index r = 0; r < m; ++r) {
    if (tab.basis()[static_cast<std::size_t>(r)] >= n_struct) {
      t.row(m) -= t.row(r);
      t(m, n_struct + r) += 1.0;
    }
  }
  for (Eigen::Index r = 0; r < m; ++r) {
    if (tab.basis()[static_cast<std::size_t>(r)] < n_struct) t(m, n_struct + r) = 0.0;
  }
  // Non-basic artificials of rows that started on a slack must never enter.
  std::vector<bool> allowed(static_cast<std::size_t>(n_cols), true);
  for (Eigen::Index r = 0; r < m; ++r) {
    if (tab.basis()[static_cast<std::size_t>(r)] != n_struct + r) allowed[static_cast<std::size_t>(n_struct + r)] = false;
  }
  LpResult out;
  LpStatus s1 = tab.run(allowed, max_iter, tol);
  if (s1 == LpStatus::IterationLimit) {
    out.status = s1;
    return out;
  }
  const double scale = 1.0 + (inv.size() ? inv.cwiseAbs().maxCoeff() : 0.0) + (eqv.size() ? eqv.cwiseAbs().maxCoeff() : 0.0);
  if (-tab.rhs(m) > 1e-9 * scale) {
    out.status = LpStatus::Infeasible;
    return out;
  }
  // Drive remaining artificials out of the basis; drop rows that turn out redundant.
  std::vector<bool> row_alive(static_cast<std::size_t>(m), true);
  for (Eigen::Index r = 0; r < m; ++r) {
    if (tab.basis()[static_cast<std::size_t>(r)] < n_struct) continue;
    Eigen::Index col = -1;
    for (Eigen::Index cidx = 0; cidx < n_struct; ++cidx) {
      if (std::abs(t(r, cidx)) > 1e-9) {
        col = cidx;
        break;
      }
    }
    if (col >= 0) {
      tab.pivot(r, col);
    } else {
      row_alive[static_cast<std::size_t>(r)] = false;
    }
  }
  for (Eigen::Index cidx = n_struct; cidx < n_cols; ++cidx) allowed[static_cast<std::size_t>(cidx)] = false;

  // Phase 2 objective row.
  t.row(m).setZero();
  t.block(m, 0, 1, n) = c.transpose();
  t.block(m, n, 1, n) = -c.transpose();
  for (Eigen::Index r = 0; r < m; ++r) {
    if (!row_alive[static_cast<std::size_t>(r)]) {
      t.row(r).setZero();
      continue;
    }
    const Eigen::Index bc = tab.basis()[static_cast<std::size_t>(r)];
    const double cb = t(m, bc);
    if (cb != 0.0) t.row(m) -= cb * t.row(r);
  }
  const LpStatus s2 = tab.run(allowed, max_iter, tol);
  out.status = s2;
  if (s2 != LpStatus::Optimal) return out;
  Vector z = Vector::Zero(n_cols);
  for (Eigen::Index r = 0; r < m; ++r) {
    if (row_alive[static_cast<std::size_t>(r)]) z(tab.basis()[static_cast<std::size_t>(r)]) = tab.rhs(r);
  }
  out.x = z.head(n) - z.segment(n, n);
  out.objective = c.dot(out.x);
  return out;
}

struct FeasibilityResult {
  bool feasible = false;
  Vector witness;       ///< Chebyshev center (capped radius) when feasible.
  double radius = 0.0;  ///< Inscribed-ball radius; negative when infeasible.
};

/// Phase-1 test for {x : F x <= h, E x = e}. The witness is strictly interior when the
/// set has an interior.
inline FeasibilityResult solve_lp_feasibility(const Matrix& f, const Vector& h, const Matrix& e_mat = Matrix(),
                                              const Vector& e_vec = Vector(), double radius_cap = 1.0) {
  require(f.rows() == h.size(), ErrorCode::DimensionMismatch, "feasibility: F and h disagree on row count");
  const Eigen::Index n = f.cols() > 0 ? f.cols() : e_mat.cols();
  FeasibilityResult out;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < f.rows(); ++j) {
    if (f.row(j).norm() > 1e-14) {
      keep.push_back(j);
    } else if (h(j) < -1e-12) {
      out.radius = h(j);
      return out;
    }
  }
  const Eigen::Index mk = static_cast<Eigen::Index>(keep.size());
  Matrix a = Matrix::Zero(mk + 1, n + 1);
  Vector b(mk + 1);
  for (Eigen::Index i = 0; i < mk; ++i) {
    const Eigen::Index j = keep[static_cast<std::size_t>(i)];
    a.block(i, 0, 1, n) = f.row(j);
    a(i, n) = f.row(j).norm();
    b(i) = h(j);
  }
  a(mk, n) = 1.0;
  b(mk) = radius_cap;
  Matrix eq;
  Vector eqv;
  if (e_mat.size() > 0) {
    require(e_mat.cols() == n, ErrorCode::DimensionMismatch, "feasibility: E has wrong column count");
    eq = Matrix::Zero(e_mat.rows(), n + 1);
    eq.leftCols(n) = e_mat;
    eqv = e_vec;
  }
  Vector c = Vector::Zero(n + 1);
  c(n) = -1.0;
  const LpResult lp = solve_lp(c, a, b, eq, eqv);
  if (lp.status != LpStatus::Optimal) {
    out.feasible = false;
    out.radius = -std::numeric_limits<double>::infinity();
    return out;
  }
  out.radius = lp.x(n);
  out.witness = lp.x.head(n);
  out.feasible = out.radius >= -1e-9;
  return out;
}

}  // namespace layercon
