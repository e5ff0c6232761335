#include <gtest/gtest.h>

#include "layercon/systems.hpp"
#include "oracles.hpp"

using namespace layercon;

namespace {

CtSystem double_integrator() {
  Matrix a(2, 2), b(2, 1), c(1, 2);
  a << 0, 1, 0, 0;
  b << 0, 1;
  c << 1, 0;
  return {a, b, c};
}

CtSystem triple_integrator() {
  Matrix a = Matrix::Zero(3, 3), b(3, 1), c(1, 3);
  a(0, 1) = 1;
  a(1, 2) = 1;
  b << 0, 0, 1;
  c << 1, 0, 0;
  return {a, b, c};
}

}  // namespace

TEST(Zoh, DoubleIntegratorUnitPeriod) {
  const DtSystem d = discretize_zoh(double_integrator(), 1.0);
  Matrix ad(2, 2);
  ad << 1, 1, 0, 1;
  EXPECT_LE((d.Ad - ad).norm(), 1e-14);
  EXPECT_NEAR(d.Bd(0), 0.5, 1e-14);
  EXPECT_NEAR(d.Bd(1), 1.0, 1e-14);
  EXPECT_DOUBLE_EQ(d.period, 1.0);
}

TEST(Zoh, DoubleIntegratorHalfPeriod) {
  const DtSystem d = discretize_zoh(double_integrator(), 0.5);
  EXPECT_NEAR(d.Ad(0, 1), 0.5, 1e-14);
  EXPECT_NEAR(d.Bd(0), 0.125, 1e-14);
  EXPECT_NEAR(d.Bd(1), 0.5, 1e-14);
}

TEST(Zoh, TripleIntegratorMatchesSymbolicIntegration) {
  for (double t : {0.1, 0.5, 1.0, 2.0}) {
    const DtSystem d = discretize_zoh(triple_integrator(), t);
    Matrix ad(3, 3);
    ad << 1, t, t * t / 2, 0, 1, t, 0, 0, 1;
    Vector bd(3);
    bd << t * t * t / 6, t * t / 2, t;
    EXPECT_LE((d.Ad - ad).norm(), 1e-13) << t;
    EXPECT_LE((d.Bd - bd).norm(), 1e-13) << t;
  }
  const DtSystem d = discretize_zoh(triple_integrator(), 0.5);
  EXPECT_NEAR(d.Bd(0), 1.0 / 48, 1e-15);
  EXPECT_NEAR(d.Bd(1), 1.0 / 8, 1e-15);
}

TEST(Zoh, OutputMatrixCopied) {
  const CtSystem s = triple_integrator();
  EXPECT_TRUE(discretize_zoh(s, 0.3).C == s.C);
}

TEST(Zoh, NonPositivePeriodRejected) {
  EXPECT_THROW(discretize_zoh(double_integrator(), 0.0), Error);
  EXPECT_THROW(discretize_zoh(double_integrator(), -1.0), Error);
}

TEST(Zoh, ConsistentAcrossRates) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const CtSystem s(oracle::random_matrix(rng, 4, 4), oracle::random_matrix(rng, 4, 2), oracle::random_matrix(rng, 2, 4));
    const int r = 2 + trial % 4;
    const double tl = 0.1 * (1 + trial % 3);
    const DtSystem lo = discretize_zoh(s, tl), hi = discretize_zoh(s, r * tl);
    Matrix apow = Matrix::Identity(4, 4), bsum = Matrix::Zero(4, 2);
    for (int k = 0; k < r; ++k) {
      bsum += apow * lo.Bd;
      apow = apow * lo.Ad;
    }
    EXPECT_LE((hi.Ad - apow).norm(), 1e-9);
    EXPECT_LE((hi.Bd - bsum).norm(), 1e-9);
  }
}

TEST(Zoh, SingularDriftStillExact) {
  // A is singular, so A^{-1}(e^{AT} - I)B is unavailable; the augmented form still works.
  Matrix a(2, 2), b(2, 1), c(1, 2);
  a << 0, 0, 0, -1;
  b << 1, 1;
  c << 1, 1;
  const DtSystem d = discretize_zoh(CtSystem(a, b, c), 2.0);
  EXPECT_NEAR(d.Bd(0), 2.0, 1e-13);
  EXPECT_NEAR(d.Bd(1), 1 - std::exp(-2.0), 1e-13);
}

TEST(Step, ZeroAndIdentity) {
  const DtSystem z = discretize_zoh(double_integrator(), 1.0);
  EXPECT_TRUE(z.step(Vector::Zero(2), Vector::Zero(1)).isZero());

  const DtSystem id{Matrix::Identity(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2), 1.0};
  Vector a(2), b(2);
  a << 1, 2;
  b << -3, 5;
  EXPECT_TRUE(step(id, a, b) == a + b);
}

TEST(Step, DimensionMismatch) {
  const DtSystem d = discretize_zoh(double_integrator(), 1.0);
  EXPECT_THROW(d.step(Vector::Zero(3), Vector::Zero(1)), Error);
  EXPECT_THROW(d.step(Vector::Zero(2), Vector::Zero(2)), Error);
}

TEST(Step, UnitInputFromRestMatchesHalfTSquared) {
  const double t = 0.25;
  const DtSystem d = discretize_zoh(double_integrator(), t);
  Vector x = Vector::Zero(2);
  const Vector u = Vector::Ones(1);
  for (int k = 1; k <= 40; ++k) {
    x = d.step(x, u);
    const double time = k * t;
    EXPECT_NEAR(d.output(x)(0), 0.5 * time * time, 1e-11 * std::max(1.0, time * time));
    EXPECT_NEAR(x(1), time, 1e-12 * std::max(1.0, time));
  }
}

TEST(Step, Linear) {
  std::mt19937_64 rng(43);
  const DtSystem d = discretize_zoh(triple_integrator(), 0.5);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x1 = oracle::random_vector(rng, 3), x2 = oracle::random_vector(rng, 3);
    const Vector u1 = oracle::random_vector(rng, 1), u2 = oracle::random_vector(rng, 1);
    const Vector lhs = d.step(x1 + x2, u1 + u2);
    const Vector rhs = d.step(x1, u1) + d.step(x2, u2) - d.step(Vector::Zero(3), Vector::Zero(1));
    EXPECT_LE((lhs - rhs).norm(), 1e-13);
  }
}

TEST(CtSystem, ValidatesShapes) {
  EXPECT_THROW(CtSystem(Matrix::Zero(2, 3), Matrix::Zero(2, 1), Matrix::Zero(1, 2)), Error);
  EXPECT_THROW(CtSystem(Matrix::Zero(2, 2), Matrix::Zero(3, 1), Matrix::Zero(1, 2)), Error);
  EXPECT_THROW(CtSystem(Matrix::Zero(2, 2), Matrix::Zero(2, 1), Matrix::Zero(1, 3)), Error);
  EXPECT_THROW(CtSystem(Matrix::Zero(1, 1), Matrix::Zero(1, 1), Matrix::Zero(2, 1)), Error);
}

TEST(RatePair, IntegerRatios) {
  const RatePair r(0.1, 0.3, 12.0);
  EXPECT_EQ(r.inner_steps(), 3);
  EXPECT_EQ(r.outer_steps(), 40);
  EXPECT_EQ(RatePair(0.5, 1.0, 120).inner_steps(), 2);
  EXPECT_EQ(RatePair(1.0, 1.0, 1.0).inner_steps(), 1);
}

TEST(RatePair, RejectsNonIntegerOrNonPositive) {
  EXPECT_THROW(RatePair(0.4, 1.0, 10.0), Error);
  EXPECT_THROW(RatePair(0.5, 1.0, 10.5), Error);
  EXPECT_THROW(RatePair(0.0, 1.0, 10.0), Error);
  EXPECT_THROW(RatePair(2.0, 1.0, 10.0), Error);
}
