#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mhplan/types.hpp"

namespace mhplan {

struct KinematicState {
  Point3 position = Point3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 acceleration = Vec3::Zero();
};

/// Current vehicle state; the start constraint of every projection.
using InitialState = KinematicState;

struct TrajectorySample {
  double t = 0.0;
  Point3 position = Point3::Zero();
  std::optional<Vec3> velocity;
  std::optional<Vec3> acceleration;
};

/// Time-stamped position samples with strictly increasing times.
class DiscreteTrajectory {
public:
  DiscreteTrajectory() = default;

  explicit DiscreteTrajectory(std::vector<TrajectorySample> samples) : samples_(std::move(samples)) {
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      require(std::isfinite(samples_[i].t) && all_finite(samples_[i].position), "trajectory sample is not finite");
      if (i > 0) require(samples_[i].t > samples_[i - 1].t, "trajectory times must be strictly increasing");
    }
  }

  /// Positions at t = t0, t0 + dt, ...
  static DiscreteTrajectory from_positions(std::span<const Point3> positions, double t0 = kSampleDt,
                                           double dt = kSampleDt) {
    std::vector<TrajectorySample> s;
    s.reserve(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i)
      s.push_back({t0 + dt * static_cast<double>(i), positions[i], std::nullopt, std::nullopt});
    return DiscreteTrajectory(std::move(s));
  }

  [[nodiscard]] std::span<const TrajectorySample> samples() const noexcept { return samples_; }
  [[nodiscard]] std::size_t size() const noexcept { return samples_.size(); }
  [[nodiscard]] bool empty() const noexcept { return samples_.empty(); }
  [[nodiscard]] const TrajectorySample &operator[](std::size_t i) const { return samples_[i]; }
  [[nodiscard]] const Point3 &position(std::size_t i) const { return samples_[i].position; }
  [[nodiscard]] double horizon() const noexcept { return samples_.empty() ? 0.0 : samples_.back().t; }

  [[nodiscard]] bool has_derivatives() const noexcept {
    return !samples_.empty() && std::all_of(samples_.begin(), samples_.end(), [](const TrajectorySample &s) {
             return s.velocity.has_value() && s.acceleration.has_value();
           });
  }

  /// True when consecutive samples are `dt` apart (to 1e-9 s).
  [[nodiscard]] bool uniformly_spaced(double dt = kSampleDt) const noexcept {
    for (std::size_t i = 1; i < samples_.size(); ++i)
      if (std::abs(samples_[i].t - samples_[i - 1].t - dt) > 1e-9) return false;
    return true;
  }

  [[nodiscard]] std::vector<Point3> positions() const {
    std::vector<Point3> out;
    out.reserve(samples_.size());
    for (const auto &s : samples_) out.push_back(s.position);
    return out;
  }

  /// Same samples with every position shifted by `offset`.
  [[nodiscard]] DiscreteTrajectory translated(const Vec3 &offset) const {
    auto copy = samples_;
    for (auto &s : copy) s.position += offset;
    return DiscreteTrajectory(std::move(copy));
  }

  /// Sum of segment lengths.
  [[nodiscard]] double path_length() const {
    double len = 0.0;
    for (std::size_t i = 1; i < samples_.size(); ++i) len += (samples_[i].position - samples_[i - 1].position).norm();
    return len;
  }

private:
  std::vector<TrajectorySample> samples_;
};

/// Cubic B-spline over [0, duration] with a clamped start.
///
/// The curve is pinned to the current state through two start anchors: the
/// current position and a second point placed so that the initial velocity
/// matches the vehicle's. Three free control points shape the rest. Knots are
/// open-uniform: {0,0,0,0, T/2, T,T,T,T}.
class CubicBSpline {
public:
  static constexpr int kFreePoints = 3;
  static constexpr int kNumPoints = kFreePoints + 2;

  CubicBSpline() : CubicBSpline(Point3::Zero(), Vec3::Zero(), {Point3::Zero(), Point3::Zero(), Point3::Zero()}) {}

  CubicBSpline(const Point3 &start, const Vec3 &start_velocity, const std::array<Point3, kFreePoints> &control,
               double duration = 1.0)
      : control_(control), start_(start), start_velocity_(start_velocity), duration_(duration) {
    require(duration > 0.0 && std::isfinite(duration), "spline duration must be positive");
    require(all_finite(start) && all_finite(start_velocity), "spline anchor is not finite");
    for (const auto &c : control) require(all_finite(c), "control point is not finite");
    points_[0] = start;
    points_[1] = start + start_velocity * velocity_anchor_gain(duration);
    for (int i = 0; i < kFreePoints; ++i) points_[i + 2] = control[static_cast<std::size_t>(i)];
  }

  /// Distance factor between the two start anchors: P1 = P0 + v0 * T / 6.
  static constexpr double velocity_anchor_gain(double duration) { return duration / 6.0; }

  [[nodiscard]] const std::array<Point3, kFreePoints> &control_points() const noexcept { return control_; }
  /// All five de Boor points, anchors included.
  [[nodiscard]] const std::array<Point3, kNumPoints> &de_boor_points() const noexcept { return points_; }
  [[nodiscard]] const Point3 &start() const noexcept { return start_; }
  [[nodiscard]] const Vec3 &start_velocity() const noexcept { return start_velocity_; }
  [[nodiscard]] double duration() const noexcept { return duration_; }

  /// Knot vector scaled to [0, duration].
  [[nodiscard]] std::array<double, kNumPoints + 4> knots() const noexcept {
    const double T = duration_;
    return {0.0, 0.0, 0.0, 0.0, 0.5 * T, T, T, T, T};
  }

private:
  std::array<Point3, kFreePoints> control_;
  std::array<Point3, kNumPoints> points_;
  Point3 start_;
  Vec3 start_velocity_;
  double duration_;
};

namespace detail {

// de Boor's algorithm on a clamped knot vector; `points` holds knots.size() - degree - 1 entries.
template <std::size_t NP, std::size_t NK>
Point3 de_boor(int degree, const std::array<Point3, NP> &points, const std::array<double, NK> &knots, double t) {
  const int last = static_cast<int>(NP) - 1;
  // span k with knots[k] <= t < knots[k+1], clamped to the last non-empty span
  int k = degree;
  while (k < last && t >= knots[static_cast<std::size_t>(k + 1)]) ++k;
  std::array<Point3, 4> d;
  for (int j = 0; j <= degree; ++j) d[j] = points[static_cast<std::size_t>(k - degree + j)];
  for (int r = 1; r <= degree; ++r) {
    for (int j = degree; j >= r; --j) {
      const auto i = static_cast<std::size_t>(k - degree + j);
      const double denom = knots[i + static_cast<std::size_t>(degree - r + 1)] - knots[i];
      const double alpha = denom > 0.0 ? (t - knots[i]) / denom : 0.0;
      d[j] = (1.0 - alpha) * d[j - 1] + alpha * d[j];
    }
  }
  return d[degree];
}

}  // namespace detail

/// Position, velocity and acceleration of the spline at t in [0, duration].
inline KinematicState bspline_eval(const CubicBSpline &spline, double t) {
  require(std::isfinite(t) && t >= 0.0 && t <= spline.duration(), "spline evaluation time outside [0, duration]");
  constexpr std::size_t n = CubicBSpline::kNumPoints;
  const auto &P = spline.de_boor_points();
  const auto U = spline.knots();

  // First-derivative (hodograph) control points: degree 2 on U[1..n+3].
  std::array<Point3, n - 1> Q;
  std::array<double, n + 2> U1;
  for (std::size_t i = 0; i + 1 < n; ++i) Q[i] = 3.0 * (P[i + 1] - P[i]) / (U[i + 4] - U[i + 1]);
  for (std::size_t i = 0; i < n + 2; ++i) U1[i] = U[i + 1];

  // Second-derivative control points: degree 1 on U[2..n+2].
  std::array<Point3, n - 2> R;
  std::array<double, n> U2;
  for (std::size_t i = 0; i + 1 < n - 1; ++i) R[i] = 2.0 * (Q[i + 1] - Q[i]) / (U1[i + 3] - U1[i + 1]);
  for (std::size_t i = 0; i < n; ++i) U2[i] = U1[i + 1];

  KinematicState s;
  s.position = detail::de_boor(3, P, U, t);
  s.velocity = detail::de_boor(2, Q, U1, t);
  s.acceleration = detail::de_boor(1, R, U2, t);
  return s;
}

/// Samples a one-second spline at t = 0.1 ... 1.0 with derivatives.
inline DiscreteTrajectory discretize(const CubicBSpline &spline) {
  require(std::abs(spline.duration() - 1.0) < 1e-12, "discretize expects the one-second expert horizon");
  std::vector<TrajectorySample> samples;
  samples.reserve(kHorizonSamples);
  for (int i = 1; i <= kHorizonSamples; ++i) {
    const double t = std::min(i * kSampleDt, spline.duration());
    const auto s = bspline_eval(spline, t);
    samples.push_back({i * kSampleDt, s.position, s.velocity, s.acceleration});
  }
  return DiscreteTrajectory(std::move(samples));
}

/// Positions only, at t = 0.1 ... 1.0. Used by the sampler's inner loop.
inline std::array<Point3, kHorizonSamples> sample_positions(const CubicBSpline &spline) {
  std::array<Point3, kHorizonSamples> out;
  const auto &P = spline.de_boor_points();
  const auto U = spline.knots();
  for (int i = 1; i <= kHorizonSamples; ++i)
    out[static_cast<std::size_t>(i - 1)] =
        detail::de_boor(3, P, U, std::min(i * kSampleDt, spline.duration()));
  return out;
}

/// Per-axis order-5 polynomials mu(s) = sum a_j s^j with a time-scale factor.
///
/// `position(t)` and friends evaluate the executed trajectory mu(beta * t);
/// `poly_*` evaluate mu itself.
struct QuinticTrajectory {
  Eigen::Matrix<double, 3, 6> coeffs = Eigen::Matrix<double, 3, 6>::Zero();
  double beta = 1.0;

  [[nodiscard]] Point3 poly_position(double s) const { return coeffs * basis(s); }
  [[nodiscard]] Vec3 poly_velocity(double s) const { return coeffs * basis_d1(s); }
  [[nodiscard]] Vec3 poly_acceleration(double s) const { return coeffs * basis_d2(s); }

  [[nodiscard]] Point3 position(double t) const { return poly_position(beta * t); }
  [[nodiscard]] Vec3 velocity(double t) const { return beta * poly_velocity(beta * t); }
  [[nodiscard]] Vec3 acceleration(double t) const { return beta * beta * poly_acceleration(beta * t); }

  [[nodiscard]] KinematicState state(double t) const { return {position(t), velocity(t), acceleration(t)}; }

  static Eigen::Matrix<double, 6, 1> basis(double s) {
    Eigen::Matrix<double, 6, 1> T;
    T << 1.0, s, s * s, s * s * s, s * s * s * s, s * s * s * s * s;
    return T;
  }
  static Eigen::Matrix<double, 6, 1> basis_d1(double s) {
    Eigen::Matrix<double, 6, 1> T;
    T << 0.0, 1.0, 2.0 * s, 3.0 * s * s, 4.0 * s * s * s, 5.0 * s * s * s * s;
    return T;
  }
  static Eigen::Matrix<double, 6, 1> basis_d2(double s) {
    Eigen::Matrix<double, 6, 1> T;
    T << 0.0, 0.0, 2.0, 6.0 * s, 12.0 * s * s, 20.0 * s * s * s;
    return T;
  }
};

class ProjectionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DegenerateTrajectoryError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Coefficients plus the Lagrange multipliers of the three start constraints, per axis.
struct QuinticProjection {
  QuinticTrajectory trajectory;
  Eigen::Matrix3d multipliers = Eigen::Matrix3d::Zero();  // row = axis
};

/// Constrained least-squares fit of a quintic per axis.
///
/// Minimizes sum_i (p_i - a^T T(t_i))^2 subject to matching position,
/// velocity and acceleration of `init` at t = 0, by solving the KKT system
///   [2 A^T A  C^T] [a     ]   [2 A^T b]
///   [C        0  ] [lambda] = [d      ].
/// Samples and `init` must be expressed in the same frame.
inline QuinticProjection project_quintic_kkt(const DiscreteTrajectory &traj, const InitialState &init) {
  require(!traj.empty(), "projection needs at least one sample");
  const auto m = static_cast<Eigen::Index>(traj.size());
  Eigen::MatrixXd A(m, 6);
  for (Eigen::Index i = 0; i < m; ++i) A.row(i) = QuinticTrajectory::basis(traj[static_cast<std::size_t>(i)].t).transpose();

  Eigen::Matrix<double, 3, 6> C = Eigen::Matrix<double, 3, 6>::Zero();
  C(0, 0) = 1.0;
  C(1, 1) = 1.0;
  C(2, 2) = 2.0;

  Eigen::Matrix<double, 9, 9> K = Eigen::Matrix<double, 9, 9>::Zero();
  K.topLeftCorner<6, 6>() = 2.0 * A.transpose() * A;
  K.topRightCorner<6, 3>() = C.transpose();
  K.bottomLeftCorner<3, 6>() = C;
  Eigen::FullPivLU<Eigen::Matrix<double, 9, 9>> lu(K);
  if (lu.rank() < 9) throw ProjectionError("rank-deficient projection system: need at least three distinct sample times");

  QuinticProjection out;
  for (int axis = 0; axis < 3; ++axis) {
    Eigen::VectorXd b(m);
    for (Eigen::Index i = 0; i < m; ++i) b[i] = traj[static_cast<std::size_t>(i)].position[axis];
    Eigen::Matrix<double, 9, 1> rhs;
    rhs.head<6>() = 2.0 * A.transpose() * b;
    rhs[6] = init.position[axis];
    rhs[7] = init.velocity[axis];
    rhs[8] = init.acceleration[axis];
    const Eigen::Matrix<double, 9, 1> sol = lu.solve(rhs);
    out.trajectory.coeffs.row(axis) = sol.head<6>().transpose();
    out.multipliers.row(axis) = sol.tail<3>().transpose();
  }
  return out;
}

inline QuinticTrajectory project_quintic(const DiscreteTrajectory &traj, const InitialState &init) {
  return project_quintic_kkt(traj, init).trajectory;
}

/// Sets beta = v_des / |mu(1) - mu(0)| so the executed trajectory mu(beta t)
/// covers the unit-time displacement at average speed v_des.
inline QuinticTrajectory time_scale(const QuinticTrajectory &q, double v_des) {
  require(v_des > 0.0 && std::isfinite(v_des), "desired speed must be positive");
  const double v_mu = (q.poly_position(1.0) - q.poly_position(0.0)).norm();
  if (!(v_mu > 1e-12)) throw DegenerateTrajectoryError("zero displacement over the unit interval (hover)");
  QuinticTrajectory out = q;
  out.beta = v_des / v_mu;
  return out;
}

/// Integral over [0,1] of the squared fourth derivative, summed over axes.
/// d4 mu / ds4 = 24 a4 + 120 a5 s.
inline double snap_cost(const QuinticTrajectory &q) {
  double total = 0.0;
  for (int axis = 0; axis < 3; ++axis) {
    const double a4 = q.coeffs(axis, 4);
    const double a5 = q.coeffs(axis, 5);
    total += 576.0 * a4 * a4 + 2880.0 * a4 * a5 + 4800.0 * a5 * a5;
  }
  return total;
}

}  // namespace mhplan
