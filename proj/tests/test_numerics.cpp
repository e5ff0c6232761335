#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "layercon/linalg.hpp"
#include "layercon/lp.hpp"
#include "layercon/qp.hpp"
#include "layercon/sdp.hpp"
#include "oracles.hpp"

using namespace layercon;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST(Expm, ZeroIsIdentity) { EXPECT_TRUE(expm(Matrix::Zero(3, 3)).isApprox(Matrix::Identity(3, 3), 1e-15)); }

TEST(Expm, NilpotentSeriesTruncates) {
  EXPECT_LE((expm(mat({{0, 1}, {0, 0}})) - mat({{1, 1}, {0, 1}})).norm(), 1e-14);
}

TEST(Expm, Diagonal) {
  const Matrix e = expm(mat({{1, 0}, {0, 2}}));
  EXPECT_NEAR(e(0, 0), std::exp(1.0), 1e-12 * std::exp(1.0));
  EXPECT_NEAR(e(1, 1), std::exp(2.0), 1e-12 * std::exp(2.0));
  EXPECT_NEAR(e(0, 1), 0.0, 1e-14);
}

TEST(Expm, InverseIsExpOfNegation) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix a = oracle::random_matrix(rng, 4, 4);
    a *= 5.0 / spectral_norm(a) * std::uniform_real_distribution<double>(0.1, 1.0)(rng);
    EXPECT_LE((expm(a) * expm(-a) - Matrix::Identity(4, 4)).norm(), 1e-9);
  }
}

TEST(Expm, RejectsNonSquare) { EXPECT_THROW(expm(Matrix::Zero(2, 3)), Error); }

TEST(SpectralRadius, DiagonalAndRotation) {
  EXPECT_NEAR(spectral_radius(mat({{0.5, 0}, {0, -0.9}})), 0.9, 1e-12);
  EXPECT_NEAR(spectral_radius(mat({{0, 1}, {-1, 0}})), 1.0, 1e-12);
}

TEST(SpectralRadius, CompanionMatchesQuadraticFormula) {
  // z^2 + b z + c with b = -1, c = 0.5
  const double b = -1.0, c = 0.5;
  const std::complex<double> disc = std::sqrt(std::complex<double>(b * b - 4 * c, 0.0));
  const double oracle_rho = std::max(std::abs((-b + disc) / 2.0), std::abs((-b - disc) / 2.0));
  EXPECT_NEAR(oracle_rho, std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(spectral_radius(mat({{-b, -c}, {1, 0}})), oracle_rho, 1e-8 * oracle_rho);
}

TEST(SpectralNorm, Basics) {
  EXPECT_NEAR(spectral_norm(Matrix::Identity(3, 3)), 1.0, 1e-14);
  EXPECT_NEAR(spectral_norm(mat({{3, 0}, {0, -4}})), 4.0, 1e-13);
}

TEST(SpectralNorm, RankOneIsProductOfNorms) {
  std::mt19937_64 rng(11);
  const Vector u = oracle::random_vector(rng, 5), v = oracle::random_vector(rng, 3);
  const double expect = u.norm() * v.norm();
  EXPECT_NEAR(spectral_norm(u * v.transpose()), expect, 1e-9 * expect);
}

TEST(Lyapunov, ZeroDynamicsReturnsRhs) {
  const Matrix q = mat({{2, 0.5}, {0.5, 1}});
  EXPECT_LE((solve_discrete_lyapunov(Matrix::Zero(2, 2), q) - q).norm(), 1e-14);
}

TEST(Lyapunov, DiagonalScalarRecursion) {
  const Matrix n = solve_discrete_lyapunov(mat({{0.5, 0}, {0, -0.8}}), Matrix::Identity(2, 2));
  EXPECT_NEAR(n(0, 0), 1.0 / (1 - 0.25), 1e-12);
  EXPECT_NEAR(n(1, 1), 1.0 / (1 - 0.64), 1e-12);
  EXPECT_NEAR(n(0, 1), 0.0, 1e-12);
}

TEST(Lyapunov, RandomStableMatchesSeries) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix f = oracle::random_matrix(rng, 3, 3);
    f *= 0.9 / spectral_radius(f);
    const Matrix g = oracle::random_matrix(rng, 3, 3);
    const Matrix q = g.transpose() * g;
    const Matrix n = solve_discrete_lyapunov(f, q);
    EXPECT_LE((f.transpose() * n * f - n + q).norm(), 1e-8 * q.norm());
    const Matrix s = oracle::lyapunov_series(f, q);
    EXPECT_LE((n - s).norm(), 1e-8 * s.norm());
  }
}

TEST(Lyapunov, UnstableIsDomainError) {
  try {
    solve_discrete_lyapunov(mat({{1.2}}), mat({{1}}));
    FAIL() << "expected a domain error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DomainError);
    EXPECT_NE(std::string(e.what()).find("1.2"), std::string::npos);
  }
}

TEST(Lstsq, IdentityAndConsistent) {
  const Matrix b = mat({{1, 2}, {3, 4}});
  EXPECT_LE((solve_linear_lstsq(Matrix::Identity(2, 2), b).solution - b).norm(), 1e-15);

  const Matrix a = mat({{1, 0}, {0, 1}, {1, 1}});
  const Vector x = vec({2, -1});
  const LstsqResult r = solve_linear_lstsq(a, a * x);
  EXPECT_LE((r.solution - x).norm(), 1e-12);
  EXPECT_LE(r.residual, 1e-10);
}

TEST(Lstsq, InconsistentMatchesNormalEquations) {
  std::mt19937_64 rng(17);
  const Matrix a = oracle::random_matrix(rng, 6, 3);
  const Vector b = oracle::random_vector(rng, 6);
  const Vector x_ne = (a.transpose() * a).llt().solve(a.transpose() * b);
  const LstsqResult r = solve_linear_lstsq(a, b);
  EXPECT_LE((r.solution - x_ne).norm(), 1e-10);
  EXPECT_NEAR(r.residual, (a * x_ne - b).norm(), 1e-10);
}

TEST(Lstsq, RankDeficientGivesMinimumNorm) {
  const Matrix a = mat({{1, 1}});
  const LstsqResult r = solve_linear_lstsq(a, mat({{2}}));
  EXPECT_NEAR(r.solution(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(r.solution(1, 0), 1.0, 1e-12);
  EXPECT_EQ(r.rank, 1);
}

TEST(Qp, ScalarActiveBound) {
  QpProblem p{mat({{2}}), vec({0}), mat({{-1}}), vec({-1}), {}, {}};
  const QpResult r = solve_qp(p);
  ASSERT_EQ(r.status, QpStatus::Optimal);
  EXPECT_NEAR(r.x(0), 1.0, 1e-7);
}

TEST(Qp, UnconstrainedIsNewtonStep) {
  const Matrix h = mat({{4, 1}, {1, 3}});
  const Vector g = vec({1, -2});
  QpProblem p{h, g, Matrix(0, 2), Vector(0), {}, {}};
  const QpResult r = solve_qp(p);
  ASSERT_EQ(r.status, QpStatus::Optimal);
  EXPECT_LE((r.x + h.ldlt().solve(g)).norm(), 1e-9);
}

TEST(Qp, EqualityConstrained) {
  QpProblem p{Matrix::Identity(2, 2), Vector::Zero(2), Matrix(0, 2), Vector(0), mat({{1, 1}}), vec({2})};
  const QpResult r = solve_qp(p);
  ASSERT_EQ(r.status, QpStatus::Optimal);
  EXPECT_LE((r.x - vec({1, 1})).norm(), 1e-8);
}

TEST(Qp, InfeasibleIsReported) {
  QpProblem p{Matrix::Identity(1, 1), Vector::Zero(1), mat({{1}, {-1}}), vec({0, -1}), {}, {}};
  EXPECT_EQ(solve_qp(p).status, QpStatus::Infeasible);
}

TEST(Qp, RandomBoxProblemsMatchActiveSetEnumeration) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 4;
    const Matrix g0 = oracle::random_matrix(rng, n, n);
    const Matrix h = g0.transpose() * g0 + 0.1 * Matrix::Identity(n, n);
    const Vector g = oracle::random_vector(rng, n, 3.0);
    Matrix a(2 * n, n);
    a << Matrix::Identity(n, n), -Matrix::Identity(n, n);
    const Vector b = Vector::Constant(2 * n, 0.5) + oracle::random_vector(rng, 2 * n, 0.4).cwiseAbs();
    const QpResult r = solve_qp({h, g, a, b, {}, {}});
    const oracle::QpOracleResult o = oracle::qp_active_set(h, g, a, b);
    ASSERT_TRUE(o.feasible);
    ASSERT_EQ(r.status, QpStatus::Optimal);
    EXPECT_LE(std::abs(r.objective - o.objective), 1e-6) << "trial " << trial;
    EXPECT_LE(r.kkt_residual, 1e-7);
    EXPECT_LE((a * r.x - b).maxCoeff(), 1e-7);
  }
}

TEST(Qp, Deterministic) {
  std::mt19937_64 rng(23);
  const Matrix g0 = oracle::random_matrix(rng, 3, 3);
  QpProblem p{g0.transpose() * g0 + Matrix::Identity(3, 3), oracle::random_vector(rng, 3), oracle::random_matrix(rng, 4, 3),
              Vector::Ones(4), {}, {}};
  const QpResult a = solve_qp(p), b = solve_qp(p);
  EXPECT_TRUE(a.x == b.x);
}

TEST(LpFeasibility, IntervalWitnessIsCenter) {
  const FeasibilityResult r = solve_lp_feasibility(mat({{1}, {-1}}), vec({1, 0}));
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.witness(0), 0.5, 1e-9);
  EXPECT_NEAR(r.radius, 0.5, 1e-9);
}

TEST(LpFeasibility, EmptyInterval) { EXPECT_FALSE(solve_lp_feasibility(mat({{1}, {-1}}), vec({0, -1})).feasible); }

TEST(LpFeasibility, RandomCutBoxesAgreeWithVertexOracle) {
  std::mt19937_64 rng(29);
  int feasible = 0, infeasible = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Matrix f(5, 2);
    f << 1, 0, 0, 1, -1, 0, 0, -1, 0, 0;
    f.row(4) = oracle::random_unit(rng, 2).transpose();
    Vector h(5);
    h << 1, 1, 1, 1, std::uniform_real_distribution<double>(-2.0, 0.5)(rng);
    const bool expect = !oracle::vertices_2d(f, h).empty();
    const FeasibilityResult r = solve_lp_feasibility(f, h);
    EXPECT_EQ(r.feasible, expect) << "trial " << trial << " cut offset " << h(4);
    if (r.feasible) {
      EXPECT_LE((f * r.witness - h).maxCoeff(), 1e-9);
    }
    (expect ? feasible : infeasible)++;
  }
  EXPECT_GT(feasible, 20);
  EXPECT_GT(infeasible, 20);
}

TEST(Lp, SmallProgram) {
  // max x + y over the unit simplex scaled by 2
  const LpResult r = solve_lp(vec({-1, -1}), mat({{1, 1}, {-1, 0}, {0, -1}}), vec({2, 0, 0}));
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.objective, -2.0, 1e-12);
}

TEST(Lp, UnboundedDetected) {
  EXPECT_EQ(solve_lp(vec({-1}), mat({{-1}}), vec({0})).status, LpStatus::Unbounded);
}

TEST(Sdp, ScalarLmisReduceToIntervals) {
  const double a = 0.5, b = 1.0, lambda = 0.1;
  const MaxMinEigResult r = sdp_max_min_eig(mat({{1}}), mat({{a}}), mat({{b}}), lambda);
  ASSERT_TRUE(r.feasible);
  const double mt = r.Mtilde(0, 0), kt = r.Ktilde(0, 0);
  // [1, mt; mt, mt] >= 0  <=>  mt <= 1
  EXPECT_LE(mt, 1.0 + 1e-8);
  // [mt, a mt + b kt; ., (1-2 lambda) mt] >= 0  <=>  (a mt + b kt)^2 <= (1-2 lambda) mt^2
  EXPECT_LE(std::pow(a * mt + b * kt, 2), (1 - 2 * lambda) * mt * mt + 1e-8);
  const double m = 1.0 / mt, k = kt * m;
  EXPECT_GE(m, 1.0 - 1e-8);
  EXPECT_LE(std::pow(a + b * k, 2) * m - (1 - 2 * lambda) * m, 1e-8);
  // The optimum pushes mt to its upper end.
  EXPECT_NEAR(r.s, 1.0, 1e-5);
}

TEST(Sdp, SchurFormsHoldAfterRecovery) {
  std::mt19937_64 rng(31);
  const Matrix a = oracle::random_matrix(rng, 3, 3), b = oracle::random_matrix(rng, 3, 1);
  const Matrix c = mat({{1, 0, 0}});
  const double lambda = 0.05;
  const MaxMinEigResult r = sdp_max_min_eig(c, a, b, lambda);
  ASSERT_TRUE(r.feasible);
  const Matrix m = r.Mtilde.inverse();
  const Matrix k = r.Ktilde * m;
  const Matrix acl = a + b * k;
  EXPECT_GE(min_sym_eigenvalue(m - c.transpose() * c), -1e-8);
  EXPECT_LE(max_sym_eigenvalue(acl.transpose() * m * acl - (1 - 2 * lambda) * m), 1e-8 * std::max(1.0, m.norm()));
}

TEST(Sdp, LambdaOutOfRangeRejected) {
  EXPECT_THROW(sdp_max_min_eig(mat({{1}}), mat({{0.5}}), mat({{1}}), 0.5), Error);
  EXPECT_THROW(sdp_max_min_eig(mat({{1}}), mat({{0.5}}), mat({{1}}), 0.0), Error);
}

TEST(Sdp, UncontrollableUnstableIsInfeasible) {
  // (2 mt)^2 <= (1 - 2 lambda) mt^2 has no solution with mt > 0.
  for (double lambda : {0.001, 0.1, 0.3, 0.49})
    EXPECT_FALSE(sdp_max_min_eig(mat({{1}}), mat({{2}}), mat({{0}}), lambda).feasible) << lambda;
}
