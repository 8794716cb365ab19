#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Geometry>

#include "mhplan/environment.hpp"
#include "mhplan/expert.hpp"
#include "mhplan/global_planner.hpp"
#include "mhplan/multimodal.hpp"
#include "mhplan/trajectory.hpp"

namespace mhplan {

inline constexpr double kGravity = 9.81;

/// Estimation and actuation disturbances measured on real flights.
struct NoiseModel {
  Vec3 velocity_mean{0.009, -0.198, -0.570};
  Vec3 velocity_sigma{0.496, 0.210, 1.243};
  Eigen::Vector4d attitude_mean{0.997, 0.002, 0.022, 0.003};  // residual quaternion (w, x, y, z)
  Eigen::Vector4d attitude_sigma{0.0, 0.003, 0.001, 0.001};
  double thrust_low = 0.9;  // collective thrust multiplier m ~ U(low, high), drawn once per run
  double thrust_high = 1.0;

  void validate() const {
    require((velocity_sigma.array() >= 0.0).all() && (attitude_sigma.array() >= 0.0).all(),
            "noise standard deviations must be non-negative");
    require(attitude_mean.norm() > 0.0, "attitude residual mean must be a non-zero quaternion");
    require(thrust_low > 0.0 && thrust_low <= thrust_high, "thrust multiplier range must satisfy 0 < low <= high");
  }
};

enum class Policy { expert, expert_local, blind };
enum class Outcome { success, collision, timeout, infeasible };

inline const char *to_string(Policy p) {
  switch (p) {
  case Policy::expert: return "expert";
  case Policy::expert_local: return "expert_local";
  case Policy::blind: return "blind";
  }
  return "?";
}

inline const char *to_string(Outcome o) {
  switch (o) {
  case Outcome::success: return "success";
  case Outcome::collision: return "collision";
  case Outcome::timeout: return "timeout";
  case Outcome::infeasible: return "infeasible";
  }
  return "?";
}

inline Policy parse_policy(const std::string &s) {
  if (s == "expert") return Policy::expert;
  if (s == "expert_local" || s == "expert-local") return Policy::expert_local;
  if (s == "blind") return Policy::blind;
  throw InputError("unknown policy '" + s + "'");
}

struct RunConfig {
  double replan_period = 0.1;
  std::vector<double> speeds{3.0, 5.0, 7.0, 10.0, 12.0};
  std::size_t n_seeds = 10;
  std::optional<NoiseModel> noise;
  Policy policy = Policy::expert;
  ExpertConfig expert;
  GlobalPlannerOptions planner;
  double timeout_factor = 3.0;  // budget = factor * reference length / v_des
  double check_dt = 0.01;       // collision and goal checks along each executed segment
  double beta_min = 0.8;        // time-scaling factor is clamped to [beta_min, beta_max]
  double beta_max = 1.25;
  std::uint64_t master_seed = 0;
  unsigned threads = 1;
  bool record_segments = false;

  void validate() const {
    const double k = replan_period / kSampleDt;
    require(replan_period > 0.0 && std::abs(k - std::round(k)) < 1e-9, "replan period must be a multiple of 0.1 s");
    for (double v : speeds) require(v > 0.0 && std::isfinite(v), "speeds must be positive");
    require(timeout_factor > 0.0 && check_dt > 0.0, "timeout factor and check step must be positive");
    require(beta_min > 0.0 && beta_min <= 1.0 && beta_max >= 1.0, "beta limits must bracket 1");
    if (noise) noise->validate();
    expert.validate();
  }
};

/// One executed replanning interval.
struct SegmentRecord {
  KinematicState start;         // true state when the segment began
  KinematicState planned_from;  // state the planner saw
  QuinticTrajectory plan;
  double duration = 0.0;
  KinematicState end;           // true state when the segment ended (possibly cut short)
};

struct RunResult {
  double speed = 0.0;
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::timeout;
  std::string cause;
  double flight_time = 0.0;
  double path_length = 0.0;
  double mean_speed = 0.0;
  std::vector<Point3> path;  // true positions at every replanning instant, plus the final one
  std::vector<SegmentRecord> segments;
};

struct AggregateRow {
  double speed = 0.0;
  std::size_t runs = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;
};

struct RunReport {
  std::string environment;
  Policy policy = Policy::expert;
  std::vector<RunResult> cells;  // speed-major, then seed
  std::vector<AggregateRow> aggregate;
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline KinematicState observe(const KinematicState &truth, const NoiseModel &noise, std::mt19937_64 &rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  KinematicState seen = truth;
  for (int k = 0; k < 3; ++k) seen.velocity[k] += noise.velocity_mean[k] + noise.velocity_sigma[k] * gauss(rng);
  Eigen::Vector4d q;
  for (int k = 0; k < 4; ++k) q[k] = noise.attitude_mean[k] + noise.attitude_sigma[k] * gauss(rng);
  const Eigen::Quaterniond residual = Eigen::Quaterniond(q[0], q[1], q[2], q[3]).normalized();
  // A tilted attitude estimate misreads the direction of the specific force.
  const Vec3 up = kGravity * Vec3::UnitZ();
  seen.acceleration = residual * (truth.acceleration + up) - up;
  return seen;
}

/// Projects a 10-sample window from `seen` and time-scales it so the executed
/// trajectory starts exactly at the observed velocity and acceleration.
inline QuinticTrajectory project_scaled(const DiscreteTrajectory &window, const KinematicState &seen, double v_des,
                                        double beta_min, double beta_max) {
  double beta = 1.0;
  auto project_with = [&](double b) {
    InitialState init{seen.position, seen.velocity / b, seen.acceleration / (b * b)};
    return project_quintic(window, init);
  };
  for (int iter = 0; iter < 6; ++iter) {
    const QuinticTrajectory q = project_with(beta);
    double next = beta;
    try {
      next = time_scale(q, v_des).beta;
    } catch (const DegenerateTrajectoryError &) {
      break;
    }
    next = std::clamp(next, beta_min, beta_max);
    if (std::abs(next - beta) < 1e-9) break;
    beta = next;
  }
  QuinticTrajectory q = project_with(beta);
  q.beta = beta;
  return q;
}

}  // namespace detail

/// Receding-horizon rollout of one scenario at one speed.
///
/// Every `replan_period` the policy plans from the observed state, the chosen
/// window is projected onto a time-scaled quintic, and the vehicle follows it
/// exactly (apart from thrust sag when noise is on) until the next replan.
inline RunResult rollout(const Scenario &scenario, const RunConfig &cfg, double v_des, std::uint64_t seed) {
  cfg.validate();
  require(v_des > 0.0, "desired speed must be positive");
  require(scenario.reference.size() >= 2, "scenario reference needs at least two samples");

  Scenario sc = scenario;
  sc.reference = retime(scenario.reference, v_des);
  const Vec3 heading = sc.reference[1].position - sc.reference[0].position;
  sc.start.velocity = heading.norm() > 0.0 ? Vec3(v_des * heading.normalized()) : Vec3::Zero();
  sc.start.acceleration = Vec3::Zero();

  RunResult res;
  res.speed = v_des;
  res.seed = seed;

  std::optional<Expert> expert;
  std::optional<ReferenceWindow> blind;
  if (cfg.policy == Policy::blind) {
    blind.emplace(sc.reference);
  } else {
    expert.emplace(sc, cfg.expert, cfg.policy == Policy::expert, cfg.planner);
  }

  std::mt19937_64 rng(detail::mix_seed(seed));
  double thrust = 1.0;
  if (cfg.noise) thrust = std::uniform_real_distribution<double>(cfg.noise->thrust_low, cfg.noise->thrust_high)(rng);

  const double budget = cfg.timeout_factor * sc.reference.path_length() / v_des;
  const Vec3 up = kGravity * Vec3::UnitZ();
  const double r_q = cfg.expert.collision.r_q;
  const int n_checks = std::max(1, static_cast<int>(std::ceil(cfg.replan_period / cfg.check_dt - 1e-9)));

  KinematicState state = sc.start;
  double t = 0.0;
  res.path.push_back(state.position);
  auto finish = [&](Outcome o, std::string cause) {
    res.outcome = o;
    res.cause = std::move(cause);
    res.flight_time = t;
    res.mean_speed = t > 0.0 ? res.path_length / t : 0.0;
    return res;
  };

  // A closed reference ends where it starts, so the goal only counts after half of it has been flown.
  const double min_travel = 0.5 * sc.reference.path_length();
  auto at_goal = [&](const Point3 &p) { return res.path_length >= min_travel && (p - sc.goal).norm() <= sc.goal_radius; };
  if (at_goal(state.position)) return finish(Outcome::success, "");
  for (std::uint64_t k = 0;; ++k) {
    if (t >= budget - 1e-9) return finish(Outcome::timeout, "time budget exhausted");

    const KinematicState seen = cfg.noise ? detail::observe(state, *cfg.noise, rng) : state;
    DiscreteTrajectory window;
    if (blind) {
      window = blind->advance(seen.position);
    } else {
      const MhResult label = expert->label_at(seen, detail::mix_seed(seed ^ (0x51ed27a3ULL + k)));
      if (label.status != PlanStatus::ok) return finish(Outcome::infeasible, "expert found no collision-free trajectory");
      HypothesisSet hyps;
      for (const auto &e : label.label.entries) {
        hyps.trajectories.push_back(to_matrix(e.trajectory, seen.position));
        hyps.costs.push_back(e.cost);
      }
      InitialState rel{Point3::Zero(), seen.velocity, seen.acceleration};
      const std::size_t pick = select_for_execution(hyps, rel);
      window = label.label.entries[pick].trajectory;
    }

    const QuinticTrajectory plan = detail::project_scaled(window, seen, v_des, cfg.beta_min, cfg.beta_max);
    const Point3 p0 = plan.position(0.0);
    const Vec3 v0 = plan.velocity(0.0);
    // Tracking is exact apart from the deviation a thrust multiplier causes: d'' = (m - 1) (a_cmd + g z).
    auto true_state = [&](double tau) {
      const double sag = thrust - 1.0;
      KinematicState s;
      s.position = plan.position(tau) + sag * (plan.position(tau) - p0 - v0 * tau + 0.5 * up * tau * tau);
      s.velocity = plan.velocity(tau) + sag * (plan.velocity(tau) - v0 + up * tau);
      s.acceleration = plan.acceleration(tau) + sag * (plan.acceleration(tau) + up);
      return s;
    };

    SegmentRecord seg{state, seen, plan, 0.0, state};
    Point3 prev = state.position;
    std::optional<Outcome> stop;
    double tau = 0.0;
    for (int i = 1; i <= n_checks && !stop; ++i) {
      tau = std::min(cfg.replan_period, i * cfg.check_dt);
      const KinematicState s = true_state(tau);
      res.path_length += (s.position - prev).norm();
      prev = s.position;
      if (!sc.cloud.empty() && sc.cloud.nearest_distance_bounded(s.position, r_q) < r_q) stop = Outcome::collision;
      else if (at_goal(s.position)) stop = Outcome::success;
    }
    const KinematicState end = true_state(tau);
    seg.duration = tau;
    seg.end = end;
    if (cfg.record_segments) res.segments.push_back(seg);
    t += tau;
    state = end;
    res.path.push_back(state.position);
    if (stop == Outcome::collision) return finish(Outcome::collision, "vehicle within r_q of an obstacle point");
    if (stop == Outcome::success) return finish(Outcome::success, "");
  }
}

using ScenarioFactory = std::function<Scenario(std::uint64_t seed)>;

/// Speeds x seeds. Seed i uses environment seed master_seed + i for every speed,
/// so all speeds (and policies) see the same realizations.
inline RunReport sweep(const ScenarioFactory &make_scenario, const RunConfig &cfg, std::string environment = "") {
  cfg.validate();
  RunReport report;
  report.environment = std::move(environment);
  report.policy = cfg.policy;

  std::vector<Scenario> scenarios;
  scenarios.reserve(cfg.n_seeds);
  for (std::size_t i = 0; i < cfg.n_seeds; ++i) scenarios.push_back(make_scenario(cfg.master_seed + i));

  const std::size_t n_cells = cfg.speeds.size() * cfg.n_seeds;
  report.cells.resize(n_cells);
  std::vector<std::exception_ptr> errors(n_cells);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < n_cells; c = next++) {
      const std::size_t si = c / cfg.n_seeds, i = c % cfg.n_seeds;
      try {
        report.cells[c] = rollout(scenarios[i], cfg, cfg.speeds[si], cfg.master_seed + i);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(n_cells)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < n_threads; ++w) pool.emplace_back(worker);
  }
  for (const auto &e : errors)
    if (e) std::rethrow_exception(e);

  for (std::size_t si = 0; si < cfg.speeds.size(); ++si) {
    AggregateRow row;
    row.speed = cfg.speeds[si];
    for (std::size_t i = 0; i < cfg.n_seeds; ++i) {
      ++row.runs;
      if (report.cells[si * cfg.n_seeds + i].outcome == Outcome::success) ++row.successes;
    }
    row.success_rate = row.runs == 0 ? 0.0 : static_cast<double>(row.successes) / static_cast<double>(row.runs);
    report.aggregate.push_back(row);
  }
  return report;
}

}  // namespace mhplan
