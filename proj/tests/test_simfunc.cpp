#include <gtest/gtest.h>

#include "layercon/layercon.hpp"
#include "oracles.hpp"

using namespace layercon;

namespace {

DtSystem scalar(double a, double b, double c = 1.0, double period = 1.0) {
  return DtSystem{Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b), Matrix::Constant(1, 1, c), period};
}

CtSystem triple_axis() {
  Matrix a = Matrix::Zero(3, 3), b(3, 1), c(1, 3);
  a(0, 1) = a(1, 2) = 1;
  b << 0, 0, 1;
  c << 1, 0, 0;
  return {a, b, c};
}

CtSystem double_axis() {
  Matrix a(2, 2), b(2, 1), c(1, 2);
  a << 0, 1, 0, 0;
  b << 0, 1;
  c << 1, 0;
  return {a, b, c};
}

struct AxisPair {
  DtSystem lower, higher;
};

AxisPair axis_pair(double period) { return {discretize_zoh(triple_axis(), period), discretize_zoh(double_axis(), period)}; }

SynthOptions with_method(SynthMethod m) {
  SynthOptions o;
  o.method = m;
  return o;
}

}  // namespace

TEST(Lift, CaseStudyAxisIsExactProjection) {
  for (double t : {0.1, 0.5, 1.0}) {
    const AxisPair ax = axis_pair(t);
    const LiftPair l = solve_lift(ax.lower, ax.higher);
    Matrix p(3, 2);
    p << 1, 0, 0, 1, 0, 0;
    EXPECT_LE((l.P - p).norm(), 1e-12) << t;
    EXPECT_LE(l.Q.norm(), 1e-12) << t;
    EXPECT_LE(l.residual_cp, 1e-12);
    EXPECT_LE(l.residual_sylv, 1e-12);
    // Substitution oracle: the claimed P, Q solve both equations exactly.
    EXPECT_LE((ax.lower.C * p - ax.higher.C).norm(), 1e-15);
    EXPECT_LE((p * ax.higher.Ad - ax.lower.Ad * p).norm(), 1e-15);
  }
}

TEST(Lift, IdenticalSystemsGiveIdentity) {
  const DtSystem d = discretize_zoh(triple_axis(), 0.5);
  const LiftPair l = solve_lift(d, d);
  EXPECT_LE((l.P - Matrix::Identity(3, 3)).norm(), 1e-10);
  EXPECT_LE(l.Q.norm(), 1e-10);
}

TEST(Lift, MissingOutputDirectionIsAssumptionError) {
  Matrix c(2, 2);
  c << 1, 0, 1, 0;
  const DtSystem lower{Matrix::Identity(2, 2), Matrix::Identity(2, 2), c, 1.0};
  const DtSystem higher{Matrix::Identity(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2), 1.0};
  try {
    solve_lift(lower, higher);
    FAIL() << "expected an assumption error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AssumptionViolated);
  }
}

TEST(Lift, UnmatchableDriftIsAssumptionError) {
  EXPECT_THROW(solve_lift(scalar(std::exp(-1.0), 0.0), scalar(1.0, 1.0)), Error);
}

TEST(Lift, FeedforwardStateForLagPair) {
  const double t = 0.25;
  const DtSystem lower = discretize_zoh(CtSystem(Matrix::Constant(1, 1, -1), Matrix::Ones(1, 1), Matrix::Ones(1, 1)), t);
  const DtSystem higher = discretize_zoh(CtSystem(Matrix::Zero(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1)), t);
  const LiftPair l = solve_lift(lower, higher);
  // P = 1 from the output equation; then Q = (1 - e^{-t}) / (1 - e^{-t}) = 1.
  EXPECT_NEAR(l.P(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(l.Q(0, 0), 1.0, 1e-12);
}

TEST(Lift, MismatchedPeriodsRejected) {
  EXPECT_THROW(solve_lift(scalar(0.5, 1, 1, 1.0), scalar(0.5, 1, 1, 0.5)), Error);
}

TEST(Lyapunov, ScalarMatchesClosedFormRiccati) {
  const double a = 0.5, b = 1.0;
  const DtSystem lower = scalar(a, b);
  // Scalar DARE with unit weights: X^2 - a^2 X - 1 = 0.
  const double x = (a * a + std::sqrt(a * a * a * a + 4)) / 2;
  const double k_oracle = -a * b * x / (1 + b * b * x);
  const Certificate c = synth_lyapunov(lower);
  EXPECT_NEAR(c.K(0, 0), k_oracle, 1e-10);
  const double acl = a + b * k_oracle;
  EXPECT_NEAR(c.lambda, 0.9 * (1 - acl * acl) / 2, 1e-10);
  // Both inequalities by direct scalar evaluation.
  const double m = c.M(0, 0);
  EXPECT_GE(m - 1.0, -1e-8);
  EXPECT_LE(acl * acl * m - (1 - 2 * c.lambda) * m, 1e-8);
}

TEST(Lyapunov, AlreadyContractiveStillValid) {
  DtSystem lower{Matrix::Zero(2, 2), Matrix::Zero(2, 1), Matrix::Zero(1, 2), 1.0};
  lower.Ad << 0.3, 0.1, 0.0, 0.2;
  lower.Bd << 0.0, 1e-3;
  lower.C << 1, 0;
  const Certificate c = synth_lyapunov(lower);
  EXPECT_LE(c.K.norm(), 1e-2);
  SimFunction sf;
  sf.M = c.M;
  sf.K = c.K;
  sf.lambda = c.lambda;
  const LmiSlack s = lmi_slack(sf, lower);
  EXPECT_TRUE(s.ok()) << s.output << " " << s.decay;
}

TEST(Lyapunov, UnactuatedUnstableIsNotStabilizable) {
  try {
    synth_lyapunov(scalar(1.5, 0.0));
    FAIL() << "expected a stabilizability error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotStabilizable);
  }
}

TEST(Lyapunov, BetaOutOfRangeRejected) {
  EXPECT_THROW(synth_lyapunov(scalar(0.5, 1.0), 1.0), Error);
  EXPECT_THROW(synth_lyapunov(scalar(0.5, 1.0), 0.0), Error);
}

TEST(SdpSynthesis, ScalarNoWorseThanLyapunov) {
  const DtSystem lower = scalar(0.5, 1.0);
  const DtSystem higher = scalar(0.8, 0.3);
  const LiftPair lift = solve_lift(lower, higher);
  const Certificate ly = synth_lyapunov(lower);
  const Certificate sd = synth_sdp(lower, higher, lift);
  const double g_ly = gamma_of(lower, higher, lift, ly.M, optimal_R(lower, higher, lift, ly.M).R, ly.lambda);
  const double g_sd = gamma_of(lower, higher, lift, sd.M, optimal_R(lower, higher, lift, sd.M).R, sd.lambda);
  EXPECT_LE(g_sd, g_ly * (1 + 1e-6));
}

TEST(SdpSynthesis, UpperLambdaBracketInfeasible) {
  const AxisPair ax = axis_pair(0.5);
  EXPECT_FALSE(sdp_max_min_eig(ax.lower.C, ax.lower.Ad, ax.lower.Bd, 0.499).feasible);
}

TEST(SdpSynthesis, CaseStudyAxisFeasibleWithFiniteGamma) {
  const AxisPair ax = axis_pair(0.5);
  SdpSearchTrace trace;
  const LiftPair lift = solve_lift(ax.lower, ax.higher);
  const Certificate c = synth_sdp(ax.lower, ax.higher, lift, {}, &trace);
  SimFunction sf;
  sf.M = c.M;
  sf.K = c.K;
  sf.lambda = c.lambda;
  EXPECT_TRUE(lmi_slack(sf, ax.lower).ok());
  EXPECT_GT(c.lambda, 0.0);
  EXPECT_LE(c.lambda, trace.lambda_max + 1e-12);
  const double g = gamma_of(ax.lower, ax.higher, lift, c.M, optimal_R(ax.lower, ax.higher, lift, c.M).R, c.lambda);
  EXPECT_TRUE(std::isfinite(g));
  EXPECT_GT(g, 0.0);
}

TEST(SdpSynthesis, AllLambdaInfeasibleIsReported) {
  const DtSystem d = scalar(2.0, 0.0);
  const LiftPair lift = solve_lift(d, d);
  try {
    synth_sdp(d, d, lift);
    FAIL() << "expected an SDP infeasibility error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SdpInfeasible);
  }
}

TEST(OptimalR, ExactMatchingZeroesResidual) {
  const AxisPair ax = axis_pair(0.5);
  const DtSystem d = ax.lower;
  const LiftPair lift = solve_lift(d, d);
  const Matrix m = synth_lyapunov(d).M;
  const OptimalR r = optimal_R(d, d, lift, m);
  EXPECT_FALSE(r.pseudo_inverse);
  EXPECT_LE((d.Bd * r.R - lift.P * d.Bd).norm(), 1e-10);
}

TEST(OptimalR, IdentityWeightSquareInput) {
  std::mt19937_64 rng(53);
  const Matrix b = oracle::random_matrix(rng, 2, 2) + 2 * Matrix::Identity(2, 2);
  const DtSystem lower{0.5 * Matrix::Identity(2, 2), b, Matrix::Identity(2, 2), 1.0};
  const DtSystem higher{0.5 * Matrix::Identity(2, 2), oracle::random_matrix(rng, 2, 2), Matrix::Identity(2, 2), 1.0};
  const LiftPair lift = solve_lift(lower, higher);
  const OptimalR r = optimal_R(lower, higher, lift, Matrix::Identity(2, 2));
  EXPECT_LE((r.R - b.inverse() * lift.P * higher.Bd).norm(), 1e-10);
}

TEST(OptimalR, LocallyMinimalAgainstPerturbations) {
  std::mt19937_64 rng(59);
  const AxisPair ax = axis_pair(0.5);
  const LiftPair lift = solve_lift(ax.lower, ax.higher);
  const Matrix g = oracle::random_matrix(rng, 3, 3);
  const Matrix m = g.transpose() * g + 0.5 * Matrix::Identity(3, 3);
  const Matrix r = optimal_R(ax.lower, ax.higher, lift, m).R;
  const Matrix msq = sym_sqrt(m);
  auto cost = [&](const Matrix& rr) { return spectral_norm(msq * (ax.lower.Bd * rr - lift.P * ax.higher.Bd)); };
  const double best = cost(r);
  for (int i = 0; i < 1000; ++i) {
    const double scale = std::pow(10.0, std::uniform_real_distribution<double>(-4, 1)(rng));
    EXPECT_LE(best, cost(r + oracle::random_matrix(rng, 1, 1, scale)) + 1e-12);
  }
}

TEST(OptimalR, RankDeficientInputFallsBack) {
  DtSystem lower{0.5 * Matrix::Identity(2, 2), Matrix::Zero(2, 2), Matrix::Identity(2, 2), 1.0};
  lower.Bd(0, 0) = 1.0;
  const DtSystem higher{0.5 * Matrix::Identity(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2), 1.0};
  LiftPair lift{Matrix::Identity(2, 2), Matrix::Zero(2, 2)};
  const OptimalR r = optimal_R(lower, higher, lift, Matrix::Identity(2, 2));
  EXPECT_TRUE(r.pseudo_inverse);
  EXPECT_TRUE(r.R.allFinite());
}

TEST(Assemble, IdenticalSystemsHaveZeroGamma) {
  const DtSystem d = discretize_zoh(double_axis(), 0.5);
  for (SynthMethod m : {SynthMethod::Lyapunov, SynthMethod::Sdp}) {
    const SimFunction sf = assemble(d, d, with_method(m));
    EXPECT_LE(sf.gamma, 1e-9) << to_string(m);
  }
}

TEST(Assemble, BothPathsSatisfyInvariants) {
  const AxisPair ax = axis_pair(0.5);
  for (SynthMethod m : {SynthMethod::Lyapunov, SynthMethod::Sdp}) {
    const SimFunction sf = assemble(ax.lower, ax.higher, with_method(m));
    EXPECT_TRUE(lmi_slack(sf, ax.lower).ok()) << to_string(m);
    EXPECT_GT(sf.lambda, 0.0);
    EXPECT_LT(sf.lambda, 0.5);
    const double g = std::sqrt(1 - sf.lambda) *
                     spectral_norm(sym_sqrt(sf.M) * (ax.lower.Bd * sf.R - sf.lift.P * ax.higher.Bd)) / sf.lambda;
    EXPECT_NEAR(sf.gamma, g, 1e-9 * std::max(1.0, g));
  }
}

TEST(Assemble, MazeRegressionFixture) {
  // Frozen from the first verified run of the bundled maze scenario at 1/T_L = 2 Hz.
  const Problem pb = load_scenario(oracle::scenario("maze.scenario"));
  const Synthesis s = synthesize(pb);
  EXPECT_NEAR(s.sf.lambda, 0.4306, 5e-4);
  EXPECT_NEAR(s.sf.gamma, 0.1233, 5e-4);
  EXPECT_TRUE(s.slack.ok());
  const PlanningBundle b = propagate(pb, s);
  EXPECT_NEAR(b.epsilon, 0.0198, 5e-4);
  EXPECT_NEAR(b.epsilon, s.sf.gamma * b.u_bar_max, 1e-12);
}

namespace {

struct Fixture {
  AxisPair ax;
  SimFunction sf;
};

Fixture axis_sf(SynthMethod m) {
  Fixture f{axis_pair(0.5), {}};
  f.sf = assemble(f.ax.lower, f.ax.higher, with_method(m));
  return f;
}

}  // namespace

TEST(EvalV, ZeroOnLiftAndQuadraticForm) {
  const Fixture f = axis_sf(SynthMethod::Lyapunov);
  Vector xbar(2);
  xbar << 0.7, -1.1;
  EXPECT_NEAR(eval_V(f.sf, xbar, f.sf.lift.P * xbar), 0.0, 1e-14);

  SimFunction plain;
  plain.M = Matrix::Identity(3, 3);
  plain.lift.P = Matrix::Zero(3, 2);
  Vector x(3);
  x << 1, 2, 2;
  EXPECT_NEAR(eval_V(plain, xbar, x), 9.0, 1e-14);
}

TEST(EvalV, DominatesOutputDistance) {
  std::mt19937_64 rng(61);
  for (SynthMethod m : {SynthMethod::Lyapunov, SynthMethod::Sdp}) {
    const Fixture f = axis_sf(m);
    for (int i = 0; i < 10000; ++i) {
      const Vector xbar = oracle::random_vector(rng, 2, 5), x = oracle::random_vector(rng, 3, 5);
      const double d = (f.ax.higher.C * xbar - f.ax.lower.C * x).squaredNorm();
      ASSERT_GE(eval_V(f.sf, xbar, x), d * (1 - 1e-12) - 1e-12) << i;
    }
  }
}

TEST(EvalController, TrivialCases) {
  const Fixture f = axis_sf(SynthMethod::Lyapunov);
  Vector xbar(2);
  xbar << 0.3, 0.4;
  EXPECT_LE(eval_controller(f.sf, Vector::Zero(1), xbar, f.sf.lift.P * xbar).norm(), 1e-14);

  SimFunction ff = f.sf;
  ff.K = Matrix::Zero(1, 3);
  ff.lift.Q = Matrix::Constant(1, 2, 0.5);
  const Vector ubar = Vector::Constant(1, 0.2);
  const Vector x = Vector::Constant(3, 9.0);
  EXPECT_NEAR(eval_controller(ff, ubar, xbar, x)(0), (ff.R * ubar)(0) + 0.35, 1e-14);
}

TEST(EvalController, OneStepDecreaseWhenInputIsSmall) {
  std::mt19937_64 rng(67);
  for (SynthMethod m : {SynthMethod::Lyapunov, SynthMethod::Sdp}) {
    const Fixture f = axis_sf(m);
    long checked = 0;
    for (int i = 0; i < 10000; ++i) {
      const Vector xbar = oracle::random_vector(rng, 2, 3), x = oracle::random_vector(rng, 3, 3);
      const double v = eval_V(f.sf, xbar, x);
      const Vector ubar = oracle::random_vector(rng, 1, 2.0 * std::sqrt(v) / std::max(f.sf.gamma, 1e-12));
      if (f.sf.gamma * f.sf.gamma * ubar.squaredNorm() >= v) continue;
      const Vector u = eval_controller(f.sf, ubar, xbar, x);
      const double vn = eval_V(f.sf, f.ax.higher.step(xbar, ubar), f.ax.lower.step(x, u));
      ASSERT_LT(vn, v) << to_string(m) << " sample " << i;
      ++checked;
    }
    EXPECT_GT(checked, 1000);
  }
}

TEST(Precision, Cases) {
  SimFunction sf;
  sf.gamma = 0.5;
  EXPECT_DOUBLE_EQ(compute_precision(sf, 0.4, 0.0).epsilon, 0.2);
  sf.gamma = 0.0;
  EXPECT_DOUBLE_EQ(compute_precision(sf, 1.0, 0.5).epsilon, 0.5);
  sf.gamma = 0.3;
  EXPECT_DOUBLE_EQ(compute_precision(sf, 1.0, 0.1).epsilon, 0.3);
  EXPECT_THROW(compute_precision(sf, 0.0, 0.1), Error);
  EXPECT_THROW(compute_precision(sf, 1.0, -0.1), Error);
}

TEST(Rollout, OutputDistanceStaysWithinEpsilon) {
  const Problem pb = load_scenario(oracle::scenario("maze.scenario"));
  const Synthesis s = synthesize(pb);
  const PlanningBundle b = propagate(pb, s);
  const std::vector<Vector> verts = enumerate_vertices(b.pieces[0].Up);
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> uni(0, 1);
  double worst = 0.0;
  for (int r = 0; r < 20; ++r) {
    Vector xbar = oracle::random_vector(rng, 4, 3);
    Vector x = s.sf.lift.P * xbar;
    for (int k = 0; k < 200; ++k) {
      // random convex combination of Up's vertices
      Vector w(static_cast<Eigen::Index>(verts.size()));
      for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = -std::log(uni(rng) + 1e-300);
      w /= w.sum();
      Vector ubar = Vector::Zero(2);
      for (std::size_t i = 0; i < verts.size(); ++i) ubar += w(static_cast<Eigen::Index>(i)) * verts[i];
      const Vector u = eval_controller(s.sf, ubar, xbar, x);
      xbar = s.sys.higher_L.step(xbar, ubar);
      x = s.sys.lower_L.step(x, u);
      worst = std::max(worst, (pb.higher.C * xbar - pb.lower.C * x).norm());
    }
  }
  EXPECT_LE(worst, b.epsilon + 1e-9);
  EXPECT_GT(worst, 0.0);
}

TEST(SynthMethod, ParseRoundTrip) {
  EXPECT_EQ(parse_synth_method("sdp"), SynthMethod::Sdp);
  EXPECT_EQ(parse_synth_method(to_string(SynthMethod::Lyapunov)), SynthMethod::Lyapunov);
  EXPECT_THROW(parse_synth_method("lqr"), Error);
}
