#include <gtest/gtest.h>

#include <random>

#include "mhplan/trajectory.hpp"
#include "oracles.hpp"

using namespace mhplan;

namespace {

struct Rng {
  std::mt19937_64 g;
  explicit Rng(unsigned s) : g(s) {}
  double u(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(g); }
  Vec3 v(double scale) { return Vec3(u(-scale, scale), u(-scale, scale), u(-scale, scale)); }
};

CubicBSpline random_spline(Rng &r, double duration = 1.0) {
  return CubicBSpline(r.v(5.0), r.v(4.0), {r.v(5.0), r.v(5.0), r.v(5.0)}, duration);
}

std::vector<double> knots_of(const CubicBSpline &s) {
  const auto k = s.knots();
  return {k.begin(), k.end()};
}

}  // namespace

TEST(DiscreteTrajectory, ValidatesTimes) {
  std::vector<TrajectorySample> s{{0.1, Point3::Zero(), {}, {}}, {0.1, Point3::Ones(), {}, {}}};
  EXPECT_THROW(DiscreteTrajectory{s}, InputError);
  s[1].t = 0.05;
  EXPECT_THROW(DiscreteTrajectory{s}, InputError);
  s[1].t = 0.2;
  s[1].position.x() = std::numeric_limits<double>::infinity();
  EXPECT_THROW(DiscreteTrajectory{s}, InputError);
}

TEST(DiscreteTrajectory, FromPositionsSpacing) {
  std::vector<Point3> pts(10, Point3::Zero());
  const auto t = DiscreteTrajectory::from_positions(pts);
  ASSERT_EQ(t.size(), 10u);
  EXPECT_NEAR(t[0].t, 0.1, 1e-15);
  EXPECT_NEAR(t[9].t, 1.0, 1e-12);
  EXPECT_TRUE(t.uniformly_spaced());
  EXPECT_FALSE(t.has_derivatives());
}

TEST(CubicBSpline, MatchesCoxDeBoorOracle) {
  Rng r(1);
  for (int n = 0; n < 50; ++n) {
    const double T = n % 2 ? 1.0 : r.u(0.3, 3.0);
    const auto s = random_spline(r, T);
    const auto U = knots_of(s);
    const auto P = s.de_boor_points();
    std::vector<oracle::V3> ctrl(P.begin(), P.end());
    for (int i = 0; i <= 40; ++i) {
      const double t = i == 40 ? T : T * i / 40.0;
      const auto k = bspline_eval(s, t);
      EXPECT_LT((k.position - oracle::spline_eval(ctrl, U, t, 0)).norm(), 1e-12 * (1 + k.position.norm()));
      EXPECT_LT((k.velocity - oracle::spline_eval(ctrl, U, t, 1)).norm(), 1e-10 * (1 + k.velocity.norm()));
      EXPECT_LT((k.acceleration - oracle::spline_eval(ctrl, U, t, 2)).norm(), 1e-10 * (1 + k.acceleration.norm()));
    }
  }
}

TEST(CubicBSpline, StartsAtCurrentState) {
  Rng r(2);
  for (int n = 0; n < 100; ++n) {
    const auto s = random_spline(r);
    const auto k = bspline_eval(s, 0.0);
    EXPECT_LT((k.position - s.start()).norm(), 1e-12);
    EXPECT_LT((k.velocity - s.start_velocity()).norm(), 1e-10);
  }
}

TEST(CubicBSpline, SecondDerivativeContinuousAtInteriorKnot) {
  Rng r(3);
  for (int n = 0; n < 20; ++n) {
    const auto s = random_spline(r);
    const double h = 1e-7;
    const auto lo = bspline_eval(s, 0.5 - h), hi = bspline_eval(s, 0.5 + h);
    EXPECT_LT((lo.position - hi.position).norm(), 1e-5);
    EXPECT_LT((lo.velocity - hi.velocity).norm(), 1e-4);
    EXPECT_LT((lo.acceleration - hi.acceleration).norm(), 1e-3);
  }
}

TEST(CubicBSpline, ConstantVelocityLineIsExact) {
  // Control points at the Greville abscissae of a straight line reproduce it.
  const Point3 x(1, 2, 3);
  const Vec3 v(3, -1, 0.5);
  const CubicBSpline s(x, v, {x + v * 0.5, x + v * (5.0 / 6.0), x + v * 1.0});
  for (int i = 0; i <= 20; ++i) {
    const double t = i / 20.0;
    const auto k = bspline_eval(s, t);
    EXPECT_LT((k.position - (x + v * t)).norm(), 1e-12);
    EXPECT_LT((k.velocity - v).norm(), 1e-11);
    EXPECT_LT(k.acceleration.norm(), 1e-10);
  }
}

TEST(CubicBSpline, EvaluationOutsideDomainRejected) {
  Rng r(4);
  const auto s = random_spline(r);
  EXPECT_THROW(bspline_eval(s, -0.01), InputError);
  EXPECT_THROW(bspline_eval(s, 1.01), InputError);
  EXPECT_THROW(CubicBSpline(Point3::Zero(), Vec3::Zero(), {Point3::Zero(), Point3::Zero(), Point3::Zero()}, 0.0),
               InputError);
}

TEST(CubicBSpline, DiscretizeHorizon) {
  Rng r(5);
  const auto s = random_spline(r);
  const auto d = discretize(s);
  ASSERT_EQ(d.size(), 10u);
  EXPECT_TRUE(d.has_derivatives());
  EXPECT_TRUE(d.uniformly_spaced());
  EXPECT_NEAR(d[9].t, 1.0, 1e-12);
  const auto pos = sample_positions(s);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_LT((pos[i] - d[i].position).norm(), 1e-12);
}

// ---------------------------------------------------------------------------
// Quintic projection

namespace {

DiscreteTrajectory random_window(Rng &r) {
  std::vector<Point3> pts;
  const Vec3 v = r.v(5.0), a = r.v(3.0);
  for (int i = 1; i <= 10; ++i) {
    const double t = i / 10.0;
    pts.push_back(v * t + 0.5 * a * t * t + r.v(0.3));
  }
  return DiscreteTrajectory::from_positions(pts);
}

InitialState random_state(Rng &r) { return {r.v(0.2), r.v(5.0), r.v(8.0)}; }

double objective(const QuinticTrajectory &q, const DiscreteTrajectory &w) {
  double f = 0.0;
  for (const auto &s : w.samples()) f += (s.position - q.poly_position(s.t)).squaredNorm();
  return f;
}

}  // namespace

TEST(Projection, SatisfiesStartConstraints) {
  Rng r(10);
  for (int n = 0; n < 1000; ++n) {
    const auto w = random_window(r);
    const auto init = random_state(r);
    const auto q = project_quintic(w, init);
    ASSERT_LT((q.poly_position(0.0) - init.position).norm(), 1e-9);
    ASSERT_LT((q.poly_velocity(0.0) - init.velocity).norm(), 1e-9);
    ASSERT_LT((q.poly_acceleration(0.0) - init.acceleration).norm(), 1e-9);
  }
}

TEST(Projection, NoWorseThanIndependentMinimizer) {
  Rng r(11);
  for (int n = 0; n < 20; ++n) {
    const auto w = random_window(r);
    const auto init = random_state(r);
    const auto q = project_quintic(w, init);
    std::vector<double> times;
    std::vector<oracle::V3> pts;
    for (const auto &s : w.samples()) times.push_back(s.t), pts.push_back(s.position);
    const auto ref = oracle::constrained_quintic_fit(times, pts, init.position, init.velocity, init.acceleration);
    EXPECT_LE(objective(q, w), ref.objective + 1e-6);
    EXPECT_NEAR(objective(q, w), ref.objective, 1e-6);
  }
}

TEST(Projection, KktStationarity) {
  Rng r(12);
  for (int n = 0; n < 50; ++n) {
    const auto w = random_window(r);
    const auto init = random_state(r);
    const auto kkt = project_quintic_kkt(w, init);
    // grad f + C^T lambda = 0 with f the squared residual.
    for (int axis = 0; axis < 3; ++axis) {
      Eigen::Matrix<double, 6, 1> grad = Eigen::Matrix<double, 6, 1>::Zero();
      for (const auto &s : w.samples()) {
        const auto T = QuinticTrajectory::basis(s.t);
        grad += 2.0 * (kkt.trajectory.coeffs.row(axis).dot(T) - s.position[axis]) * T;
      }
      grad[0] += kkt.multipliers(axis, 0);
      grad[1] += kkt.multipliers(axis, 1);
      grad[2] += 2.0 * kkt.multipliers(axis, 2);
      EXPECT_LT(grad.norm(), 1e-8);
    }
  }
}

TEST(Projection, RoundTripIsIdempotent) {
  Rng r(13);
  for (int n = 0; n < 100; ++n) {
    const auto init = random_state(r);
    const auto q = project_quintic(random_window(r), init);
    std::vector<Point3> pts;
    for (int i = 1; i <= 10; ++i) pts.push_back(q.poly_position(i / 10.0));
    const auto q2 = project_quintic(DiscreteTrajectory::from_positions(pts), init);
    EXPECT_LT((q.coeffs - q2.coeffs).norm(), 1e-8 * (1.0 + q.coeffs.norm()));
  }
}

TEST(Projection, ReproducesQuinticSamples) {
  QuinticTrajectory truth;
  truth.coeffs << 1, 2, 0.5, -1, 0.3, 0.2, 0, -1, 1, 2, -2, 0.5, 3, 0, 0, 0.1, 0.2, -0.3;
  std::vector<Point3> pts;
  for (int i = 1; i <= 10; ++i) pts.push_back(truth.poly_position(i / 10.0));
  const InitialState init{truth.poly_position(0), truth.poly_velocity(0), truth.poly_acceleration(0)};
  const auto q = project_quintic(DiscreteTrajectory::from_positions(pts), init);
  EXPECT_LT((q.coeffs - truth.coeffs).norm(), 1e-8);
}

TEST(Projection, TooFewSamplesIsRankDeficient) {
  std::vector<Point3> pts{Point3(1, 0, 0), Point3(2, 0, 0)};
  EXPECT_THROW(project_quintic(DiscreteTrajectory::from_positions(pts), InitialState{}), ProjectionError);
  EXPECT_THROW(project_quintic(DiscreteTrajectory{}, InitialState{}), InputError);
}

TEST(TimeScale, MatchesDesiredAverageSpeed) {
  Rng r(14);
  for (int n = 0; n < 100; ++n) {
    const auto q = project_quintic(random_window(r), random_state(r));
    const double v_des = r.u(1.0, 12.0);
    const auto s = time_scale(q, v_des);
    const double v_mu = (q.poly_position(1.0) - q.poly_position(0.0)).norm();
    EXPECT_NEAR(s.beta, v_des / v_mu, 1e-12);
    // Executed trajectory covers mu(0)..mu(1) in 1 / beta seconds.
    const double t_end = 1.0 / s.beta;
    EXPECT_NEAR((s.position(t_end) - s.position(0.0)).norm() / t_end, v_des, 1e-9);
    EXPECT_LT((s.velocity(0.3) - s.beta * q.poly_velocity(0.3 * s.beta)).norm(), 1e-12);
  }
}

TEST(TimeScale, HoverIsDegenerate) {
  QuinticTrajectory q;
  EXPECT_THROW(time_scale(q, 3.0), DegenerateTrajectoryError);
  q.coeffs(0, 1) = 1.0;
  EXPECT_THROW(time_scale(q, 0.0), InputError);
}

TEST(SnapCost, MatchesQuadrature) {
  Rng r(15);
  for (int n = 0; n < 100; ++n) {
    QuinticTrajectory q;
    for (int i = 0; i < 18; ++i) q.coeffs.data()[i] = r.u(-3, 3);
    EXPECT_NEAR(snap_cost(q), oracle::snap_quadrature(q.coeffs), 1e-9 * (1 + snap_cost(q)));
  }
}

TEST(SnapCost, ZeroForCubics) {
  QuinticTrajectory q;
  q.coeffs.leftCols<4>().setRandom();
  EXPECT_EQ(snap_cost(q), 0.0);
}
