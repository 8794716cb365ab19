#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mhplan/environment.hpp"
#include "mhplan/geometry.hpp"
#include "mhplan/global_planner.hpp"
#include "mhplan/mh_chain.hpp"
#include "mhplan/trajectory.hpp"

namespace mhplan {

struct ExpertConfig {
  double lambda_c = 1000.0;
  Eigen::Matrix3d Q = Eigen::Matrix3d::Identity();
  std::size_t total_samples = 50000;
  VarianceSchedule schedule;  // {2, 5, 10}, switching every 16000 proposals
  double horizon = 1.0;
  std::size_t top_k = 3;
  double dedup_distance = 0.1;  // labels closer than this (max pointwise) count as one mode
  CollisionModel collision;
  std::uint64_t seed = 0;
  bool record_chain = false;

  void validate() const {
    require(lambda_c >= 0.0, "lambda_c must be non-negative");
    require(Q.isApprox(Q.transpose(), 1e-12), "Q must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(Q, Eigen::EigenvaluesOnly);
    require(eig.eigenvalues().minCoeff() >= -1e-12, "Q must be positive semidefinite");
    schedule.validate();
    require(std::abs(horizon - 1.0) < 1e-12, "the expert plans over a one-second horizon");
    require(top_k >= 1 && total_samples >= top_k, "need total_samples >= top_k >= 1");
    require(dedup_distance >= 0.0, "dedup distance must be non-negative");
  }
};

// ---------------------------------------------------------------------------
// Cost

struct CostBreakdown {
  double collision = 0.0;  // 0.1 * sum of truncated-quadratic penalties (without lambda_c)
  double tracking = 0.0;   // 0.1 * sum of (p - ref)^T Q (p - ref)
  double total = 0.0;      // 0.1 * sum [lambda_c C + e^T Q e]
  bool collides = false;   // some sample closer than r_q
};

/// Rectangle-rule evaluation of the trajectory cost at the 0.1 s samples.
inline CostBreakdown evaluate_cost(std::span<const Point3> positions, std::span<const Point3> reference,
                                   const PointCloud &cloud, const ExpertConfig &cfg) {
  require(positions.size() == reference.size(), "trajectory and reference must have the same samples");
  CostBreakdown c;
  const double bound = cfg.collision.influence_radius();
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const double d = cloud.nearest_distance_bounded(positions[i], bound);
    if (d < bound) c.collision += collision_cost(cfg.collision, d);
    if (d < cfg.collision.r_q) c.collides = true;
    const Vec3 e = positions[i] - reference[i];
    c.tracking += e.dot(cfg.Q * e);
  }
  c.collision *= kSampleDt;
  c.tracking *= kSampleDt;
  c.total = cfg.lambda_c * c.collision + c.tracking;
  return c;
}

inline double trajectory_cost(const DiscreteTrajectory &traj, const DiscreteTrajectory &ref, const PointCloud &cloud,
                              const ExpertConfig &cfg) {
  require(traj.size() == ref.size(), "trajectory and reference sample counts differ");
  for (std::size_t i = 0; i < traj.size(); ++i)
    require(std::abs(traj[i].t - ref[i].t) < 1e-9, "trajectory and reference sample times differ");
  const auto p = traj.positions(), r = ref.positions();
  return evaluate_cost(p, r, cloud, cfg).total;
}

/// exp(-cost). Underflows to 0 for large costs; the sampler works with -cost directly.
inline double score(const DiscreteTrajectory &traj, const DiscreteTrajectory &ref, const PointCloud &cloud,
                    const ExpertConfig &cfg) {
  return std::exp(-trajectory_cost(traj, ref, cloud, cfg));
}

/// Truncated-quadratic collision cost integrated over a sampled trajectory (0.1 s weights).
inline double trajectory_collision_cost(const PointCloud &cloud, const CollisionModel &model,
                                        std::span<const Point3> positions) {
  double total = 0.0;
  for (const auto &p : positions) {
    const double d = cloud.nearest_distance_bounded(p, model.influence_radius());
    total += collision_cost(model, d);
  }
  return kSampleDt * total;
}

// ---------------------------------------------------------------------------
// Spherical control-point parametrization

/// Each free control point as (r, polar, azimuth) in the heading frame of the current state.
struct SphericalControlPoints {
  std::array<Vec3, CubicBSpline::kFreePoints> coords{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};

  /// r >= 0, polar in [0, pi], azimuth in (-pi, pi]; the Cartesian point is unchanged.
  void canonicalize() {
    constexpr double pi = std::numbers::pi;
    for (auto &c : coords) {
      double r = c[0], polar = c[1], az = c[2];
      if (r < 0.0) {
        r = -r;
        polar = pi - polar;
        az += pi;
      }
      polar = std::fmod(polar, 2.0 * pi);
      if (polar < 0.0) polar += 2.0 * pi;
      if (polar > pi) {
        polar = 2.0 * pi - polar;
        az += pi;
      }
      az = std::remainder(az, 2.0 * pi);
      if (az <= -pi) az += 2.0 * pi;
      c = Vec3(r, polar, az);
    }
  }
};

/// Local frame at the current position: x along the horizontal heading, z up.
struct HeadingFrame {
  Point3 origin = Point3::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();  // columns are the frame axes in world coordinates

  static HeadingFrame make(const Point3 &origin, const Vec3 &heading) {
    HeadingFrame f;
    f.origin = origin;
    Vec3 h(heading.x(), heading.y(), 0.0);
    if (h.norm() < 1e-9) h = Vec3::UnitX();
    h.normalize();
    f.rotation.col(0) = h;
    f.rotation.col(2) = Vec3::UnitZ();
    f.rotation.col(1) = Vec3::UnitZ().cross(h);
    return f;
  }

  [[nodiscard]] Point3 to_world(const Vec3 &sph) const {
    const double r = sph[0], polar = sph[1], az = sph[2];
    const Vec3 local(r * std::sin(polar) * std::cos(az), r * std::sin(polar) * std::sin(az), r * std::cos(polar));
    return origin + rotation * local;
  }

  [[nodiscard]] Vec3 to_spherical(const Point3 &p) const {
    const Vec3 local = rotation.transpose() * (p - origin);
    const double r = local.norm();
    if (r < 1e-15) return Vec3(0.0, std::numbers::pi / 2.0, 0.0);
    return Vec3(r, std::acos(std::clamp(local.z() / r, -1.0, 1.0)), std::atan2(local.y(), local.x()));
  }
};

/// B-spline basis values at t = 0.1 ... 1.0 for the five de Boor points of a one-second spline.
inline const Eigen::Matrix<double, kHorizonSamples, CubicBSpline::kNumPoints> &horizon_basis() {
  static const auto basis = [] {
    Eigen::Matrix<double, kHorizonSamples, CubicBSpline::kNumPoints> B;
    for (int j = 0; j < CubicBSpline::kNumPoints; ++j) {
      std::array<Point3, CubicBSpline::kNumPoints> unit;
      unit.fill(Point3::Zero());
      unit[static_cast<std::size_t>(j)] = Point3::UnitX();
      const CubicBSpline probe(Point3::Zero(), Vec3::Zero(), {Point3::Zero(), Point3::Zero(), Point3::Zero()});
      const auto U = probe.knots();
      for (int i = 0; i < kHorizonSamples; ++i) B(i, j) = detail::de_boor(3, unit, U, (i + 1) * kSampleDt).x();
    }
    return B;
  }();
  return basis;
}

// ---------------------------------------------------------------------------
// Labels

struct LabelEntry {
  DiscreteTrajectory trajectory;  // t = 0.1 ... 1.0, absolute positions with derivatives
  CubicBSpline spline;
  double cost = 0.0;
  double collision_cost = 0.0;  // trajectory-level collision term (without lambda_c)
};

/// Up to top_k collision-free trajectories, ascending by cost.
struct ExpertLabel {
  std::vector<LabelEntry> entries;

  [[nodiscard]] std::size_t size() const noexcept { return entries.size(); }
  [[nodiscard]] bool empty() const noexcept { return entries.empty(); }
  [[nodiscard]] std::vector<double> costs() const {
    std::vector<double> c;
    for (const auto &e : entries) c.push_back(e.cost);
    return c;
  }
};

enum class PlanStatus { ok, infeasible };

struct MhResult {
  PlanStatus status = PlanStatus::infeasible;
  ExpertLabel label;
  ChainStats stats;
  std::vector<SphericalControlPoints> chain;  // filled when cfg.record_chain
};

namespace detail {

struct Candidate {
  std::array<Point3, kHorizonSamples> positions;
  std::array<Point3, CubicBSpline::kFreePoints> control;
  CostBreakdown cost;
};

// Lowest-cost candidates that are pairwise at least `min_distance` apart (max pointwise).
class DistinctBest {
public:
  DistinctBest(std::size_t capacity, double min_distance) : capacity_(capacity), min_distance_(min_distance) {}

  void offer(const Candidate &c) {
    if (list_.size() == capacity_ && c.cost.total >= list_.back().cost.total) return;
    for (const auto &e : list_)
      if (e.cost.total <= c.cost.total && close(e, c)) return;
    std::erase_if(list_, [&](const Candidate &e) { return close(e, c); });
    const auto pos = std::upper_bound(list_.begin(), list_.end(), c.cost.total,
                                      [](double v, const Candidate &e) { return v < e.cost.total; });
    list_.insert(pos, c);
    if (list_.size() > capacity_) list_.pop_back();
  }

  [[nodiscard]] const std::vector<Candidate> &best() const noexcept { return list_; }

private:
  [[nodiscard]] bool close(const Candidate &a, const Candidate &b) const {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.positions.size(); ++i)
      worst = std::max(worst, (a.positions[i] - b.positions[i]).norm());
    return worst < min_distance_;
  }

  std::size_t capacity_;
  double min_distance_;
  std::vector<Candidate> list_;
};

}  // namespace detail

/// Free control points whose spline best fits the reference window (anchors held fixed).
inline std::array<Point3, CubicBSpline::kFreePoints> fit_control_points(const InitialState &init,
                                                                        std::span<const Point3> window) {
  require(window.size() == static_cast<std::size_t>(kHorizonSamples), "reference window must have 10 samples");
  const auto &B = horizon_basis();
  Eigen::Matrix<double, kHorizonSamples, 3> rhs;
  const Point3 p0 = init.position;
  const Point3 p1 = init.position + init.velocity * CubicBSpline::velocity_anchor_gain(1.0);
  for (int i = 0; i < kHorizonSamples; ++i)
    rhs.row(i) = (window[static_cast<std::size_t>(i)] - B(i, 0) * p0 - B(i, 1) * p1).transpose();
  const Eigen::Matrix<double, kHorizonSamples, 3> free = B.rightCols<3>();
  const Eigen::Matrix3d sol = free.colPivHouseholderQr().solve(rhs);
  return {sol.row(0).transpose(), sol.row(1).transpose(), sol.row(2).transpose()};
}

/// Metropolis-Hastings over spherical control points around a one-second reference window.
///
/// Every proposal perturbs all nine spherical coordinates jointly with a
/// zero-mean Gaussian whose variance follows `cfg.schedule`. After sampling,
/// proposals in collision are dropped and the `top_k` lowest-cost distinct
/// survivors form the label.
inline MhResult mh_sample(const DiscreteTrajectory &ref, const PointCloud &cloud, const InitialState &init,
                          const ExpertConfig &cfg) {
  cfg.validate();
  require(ref.size() == static_cast<std::size_t>(kHorizonSamples), "reference window must hold the 10 horizon samples");
  const auto window = ref.positions();
  const auto &B = horizon_basis();

  const HeadingFrame frame = HeadingFrame::make(init.position, window.back() - init.position);
  const Point3 p0 = init.position;
  const Point3 p1 = init.position + init.velocity * CubicBSpline::velocity_anchor_gain(1.0);
  Eigen::Matrix<double, kHorizonSamples, 3> anchor_part;
  for (int i = 0; i < kHorizonSamples; ++i) anchor_part.row(i) = (B(i, 0) * p0 + B(i, 1) * p1).transpose();

  auto control_of = [&](const SphericalControlPoints &s) {
    std::array<Point3, CubicBSpline::kFreePoints> c;
    for (std::size_t j = 0; j < c.size(); ++j) c[j] = frame.to_world(s.coords[j]);
    return c;
  };

  // The sampler state carries its evaluated cost so the visitor does not recompute it.
  struct State {
    SphericalControlPoints sph;
    detail::Candidate cand;
  };
  auto evaluate = [&](const SphericalControlPoints &s) {
    State st{s, {}};
    st.cand.control = control_of(s);
    for (int i = 0; i < kHorizonSamples; ++i) {
      Vec3 p = anchor_part.row(i).transpose();
      for (int j = 0; j < CubicBSpline::kFreePoints; ++j) p += B(i, j + 2) * st.cand.control[static_cast<std::size_t>(j)];
      st.cand.positions[static_cast<std::size_t>(i)] = p;
    }
    st.cand.cost = evaluate_cost(st.cand.positions, window, cloud, cfg);
    return st;
  };

  SphericalControlPoints start;
  const auto init_ctrl = fit_control_points(init, window);
  for (std::size_t j = 0; j < init_ctrl.size(); ++j) start.coords[j] = frame.to_spherical(init_ctrl[j]);

  MhResult result;
  detail::DistinctBest best(std::max<std::size_t>(cfg.top_k * 8, 32), cfg.dedup_distance);
  const State initial = evaluate(start);
  if (!initial.cand.cost.collides) best.offer(initial.cand);
  if (cfg.record_chain) result.chain.reserve(cfg.total_samples + 1), result.chain.push_back(initial.sph);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto propose = [&](const State &cur, std::size_t step, std::mt19937_64 &g) {
    const double sigma = std::sqrt(cfg.schedule.variance_at(step));
    SphericalControlPoints s = cur.sph;
    for (auto &c : s.coords)
      for (int k = 0; k < 3; ++k) c[k] += sigma * gauss(g);
    s.canonicalize();
    return evaluate(s);
  };
  auto log_score = [](const State &s) { return -s.cand.cost.total; };
  auto visit = [&](std::size_t, const State &cand, double, bool, const State &current) {
    if (!cand.cand.cost.collides) best.offer(cand.cand);
    if (cfg.record_chain) result.chain.push_back(current.sph);
  };
  result.stats = run_metropolis_hastings(initial, cfg.total_samples, log_score, propose, visit, rng);

  const auto &survivors = best.best();
  for (std::size_t k = 0; k < std::min(cfg.top_k, survivors.size()); ++k) {
    const auto &c = survivors[k];
    LabelEntry e;
    e.spline = CubicBSpline(init.position, init.velocity, c.control, 1.0);
    e.trajectory = discretize(e.spline);
    e.cost = c.cost.total;
    e.collision_cost = c.cost.collision;
    result.label.entries.push_back(std::move(e));
  }
  result.status = result.label.empty() ? PlanStatus::infeasible : PlanStatus::ok;
  return result;
}

// ---------------------------------------------------------------------------
// Reference windows and labeling

/// Follows a reference by closest-point projection and cuts one-second windows from it.
class ReferenceWindow {
public:
  explicit ReferenceWindow(DiscreteTrajectory reference, double lookahead = 5.0)
      : ref_(std::move(reference)), lookahead_(lookahead) {
    require(!ref_.empty(), "reference is empty");
  }

  [[nodiscard]] const DiscreteTrajectory &reference() const noexcept { return ref_; }
  [[nodiscard]] double cursor_time() const noexcept { return cursor_t_; }

  /// Projects `p` onto the reference (never moving backwards) and returns the
  /// window of 10 samples that follow the projection, at t = 0.1 ... 1.0.
  DiscreteTrajectory advance(const Point3 &p) {
    const auto n = ref_.size();
    double best_d = std::numeric_limits<double>::infinity();
    double best_t = cursor_t_;
    const double t_max = cursor_t_ + lookahead_;
    for (std::size_t i = cursor_seg_; i + 1 < n && ref_[i].t <= t_max; ++i) {
      const Point3 &a = ref_[i].position, &b = ref_[i + 1].position;
      const Vec3 ab = b - a;
      const double len2 = ab.squaredNorm();
      const double dt = ref_[i + 1].t - ref_[i].t;
      const double u_lo = std::clamp((cursor_t_ - ref_[i].t) / dt, 0.0, 1.0);
      const double u = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, u_lo, 1.0) : u_lo;
      const double d = (a + u * ab - p).norm();
      if (d < best_d) {
        best_d = d;
        best_t = ref_[i].t + u * dt;
        cursor_seg_ = i;
      }
    }
    if (n == 1) best_t = ref_[0].t;
    cursor_t_ = best_t;
    return window_at(cursor_t_);
  }

  /// Window starting at reference time t0; times past the end hold the last position.
  [[nodiscard]] DiscreteTrajectory window_at(double t0) const {
    std::vector<Point3> pts;
    pts.reserve(kHorizonSamples);
    for (int i = 1; i <= kHorizonSamples; ++i) pts.push_back(position_at(t0 + i * kSampleDt));
    return DiscreteTrajectory::from_positions(pts);
  }

  [[nodiscard]] Point3 position_at(double t) const {
    if (t <= ref_[0].t) return ref_[0].position;
    if (t >= ref_.horizon()) return ref_[ref_.size() - 1].position;
    const auto samples = ref_.samples();
    const auto it = std::upper_bound(samples.begin(), samples.end(), t,
                                     [](double v, const TrajectorySample &s) { return v < s.t; });
    const auto &b = *it;
    const auto &a = *(it - 1);
    const double u = (t - a.t) / (b.t - a.t);
    return a.position + u * (b.position - a.position);
  }

private:
  DiscreteTrajectory ref_;
  double lookahead_;
  std::size_t cursor_seg_ = 0;
  double cursor_t_ = 0.0;
};

/// Privileged planner bound to one scenario. The global plan (if requested) is
/// computed once; each call to `label_at` labels the given state.
class Expert {
public:
  Expert(const Scenario &scenario, ExpertConfig cfg, bool use_global, GlobalPlannerOptions planner = {})
      : scenario_(scenario), cfg_(std::move(cfg)), window_(scenario.reference) {
    cfg_.validate();
    if (use_global) {
      planner.inflation = cfg_.collision.r_q;
      plan_ = global_plan(scenario, planner);
      if (!plan_->blocked) {
        window_ = ReferenceWindow(plan_->trajectory);
        conditioned_on_global_ = true;
      }
    }
  }

  [[nodiscard]] const std::optional<GlobalPlan> &plan() const noexcept { return plan_; }
  /// False when the raw reference is used, either by request or because the global plan was blocked.
  [[nodiscard]] bool conditioned_on_global() const noexcept { return conditioned_on_global_; }
  [[nodiscard]] const ExpertConfig &config() const noexcept { return cfg_; }
  [[nodiscard]] const ReferenceWindow &window() const noexcept { return window_; }

  MhResult label_at(const InitialState &state, std::uint64_t seed) {
    const DiscreteTrajectory ref = window_.advance(state.position);
    ExpertConfig cfg = cfg_;
    cfg.seed = seed;
    return mh_sample(ref, scenario_.cloud, state, cfg);
  }

  MhResult label_at(const InitialState &state) { return label_at(state, cfg_.seed); }

private:
  Scenario scenario_;
  ExpertConfig cfg_;
  ReferenceWindow window_;
  std::optional<GlobalPlan> plan_;
  bool conditioned_on_global_ = false;
};

/// Labels the scenario's start state.
inline MhResult label(const Scenario &scenario, const ExpertConfig &cfg, bool use_global,
                      const GlobalPlannerOptions &planner = {}) {
  Expert expert(scenario, cfg, use_global, planner);
  return expert.label_at(scenario.start);
}

}  // namespace mhplan
