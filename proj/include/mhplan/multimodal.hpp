#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mhplan/expert.hpp"
#include "mhplan/geometry.hpp"
#include "mhplan/trajectory.hpp"

namespace mhplan {

/// Ten relative positions (rows) at t = 0.1 ... 1.0.
using TrajectoryMatrix = Eigen::Matrix<double, kHorizonSamples, 3>;

struct HypothesisSet {
  std::vector<TrajectoryMatrix> trajectories;
  std::vector<double> costs;  // predicted collision costs c_k, one per trajectory

  [[nodiscard]] std::size_t size() const noexcept { return trajectories.size(); }
};

struct LabelSet {
  std::vector<TrajectoryMatrix> trajectories;
  std::vector<double> collision_costs;  // optional ground truth, unused by the R-WTA term
};

struct LossConfig {
  double epsilon = 0.05;  // nearest hypothesis gets 1 - epsilon
  double lambda1 = 10.0;
  double lambda2 = 0.1;

  void validate() const {
    require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
    require(lambda1 >= 0.0 && lambda2 >= 0.0, "loss weights must be non-negative");
  }
};

inline TrajectoryMatrix to_matrix(const DiscreteTrajectory &traj, const Point3 &origin = Point3::Zero()) {
  require(traj.size() == static_cast<std::size_t>(kHorizonSamples), "expected the 10-sample horizon layout");
  TrajectoryMatrix m;
  for (int i = 0; i < kHorizonSamples; ++i) m.row(i) = (traj.position(static_cast<std::size_t>(i)) - origin).transpose();
  return m;
}

inline DiscreteTrajectory to_trajectory(const TrajectoryMatrix &m, const Point3 &origin = Point3::Zero()) {
  std::vector<Point3> pts;
  for (int i = 0; i < kHorizonSamples; ++i) pts.push_back(origin + m.row(i).transpose());
  return DiscreteTrajectory::from_positions(pts);
}

/// For every label, the index of its closest hypothesis (ties go to the lower index).
inline std::vector<std::size_t> nearest_hypothesis(const LabelSet &labels, const HypothesisSet &hyps) {
  std::vector<std::size_t> out;
  out.reserve(labels.trajectories.size());
  for (const auto &e : labels.trajectories) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < hyps.size(); ++k) {
      const double d = (e - hyps.trajectories[k]).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    out.push_back(best);
  }
  return out;
}

/// Relaxed assignment weights, one row per label: 1 - eps for the label's
/// nearest hypothesis, eps / (M - 1) for the rest; all ones when M = 1.
inline Eigen::MatrixXd rwta_weights(const LabelSet &labels, const HypothesisSet &hyps, const LossConfig &cfg) {
  cfg.validate();
  const auto n = static_cast<Eigen::Index>(labels.trajectories.size());
  const auto m = static_cast<Eigen::Index>(hyps.size());
  Eigen::MatrixXd w(n, m);
  if (m == 1) {
    w.setOnes();
    return w;
  }
  w.setConstant(cfg.epsilon / static_cast<double>(m - 1));
  const auto nearest = nearest_hypothesis(labels, hyps);
  for (Eigen::Index i = 0; i < n; ++i) w(i, static_cast<Eigen::Index>(nearest[static_cast<std::size_t>(i)])) = 1.0 - cfg.epsilon;
  return w;
}

struct LossAndGradient {
  double loss = 0.0;
  std::vector<TrajectoryMatrix> gradient;  // d loss / d hypothesis positions, assignment held fixed
};

inline LossAndGradient rwta_loss(const LabelSet &labels, const HypothesisSet &hyps, const LossConfig &cfg) {
  require(!hyps.trajectories.empty(), "need at least one hypothesis");
  LossAndGradient out;
  out.gradient.assign(hyps.size(), TrajectoryMatrix::Zero());
  if (labels.trajectories.empty()) return out;
  const Eigen::MatrixXd w = rwta_weights(labels, hyps, cfg);
  for (std::size_t i = 0; i < labels.trajectories.size(); ++i) {
    for (std::size_t k = 0; k < hyps.size(); ++k) {
      const TrajectoryMatrix diff = hyps.trajectories[k] - labels.trajectories[i];
      const double a = w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      out.loss += a * diff.squaredNorm();
      out.gradient[k] += 2.0 * a * diff;
    }
  }
  return out;
}

/// Obstacles used to compute ground-truth collision costs of hypotheses.
struct CollisionContext {
  PointCloud cloud;
  Point3 origin = Point3::Zero();  // current position; hypotheses are relative to it
  CollisionModel model;
};

struct TotalLoss {
  double total = 0.0;
  double rwta = 0.0;
  double cost_term = 0.0;
  bool cost_term_skipped = false;
};

/// lambda1 * R-WTA + lambda2 * sum_k (c_k - C_collision(hyp_k))^2.
/// Without a collision context the cost term is skipped and flagged.
inline TotalLoss total_loss(const LabelSet &labels, const HypothesisSet &hyps, const LossConfig &cfg,
                            const std::optional<CollisionContext> &ctx) {
  TotalLoss out;
  out.rwta = rwta_loss(labels, hyps, cfg).loss;
  if (ctx) {
    require(hyps.costs.size() == hyps.size(), "one predicted cost per hypothesis is required");
    for (std::size_t k = 0; k < hyps.size(); ++k) {
      std::array<Point3, kHorizonSamples> pts;
      for (int i = 0; i < kHorizonSamples; ++i)
        pts[static_cast<std::size_t>(i)] = ctx->origin + hyps.trajectories[k].row(i).transpose();
      const double truth = trajectory_collision_cost(ctx->cloud, ctx->model, pts);
      out.cost_term += (hyps.costs[k] - truth) * (hyps.costs[k] - truth);
    }
  } else {
    out.cost_term_skipped = true;
  }
  out.total = cfg.lambda1 * out.rwta + cfg.lambda2 * out.cost_term;
  return out;
}

struct FitOptions {
  std::size_t modes = 3;
  std::size_t steps = 2000;
  double step_size = 0.0;  // <= 0 picks 0.25 / |labels|
  std::size_t patience = 50;
  std::uint64_t seed = 0;
};

struct FitResult {
  HypothesisSet hypotheses;
  std::vector<double> trace;  // R-WTA loss before each step, then the final value
  bool diverged = false;
};

/// Fixed-step gradient descent on hypothesis positions under the R-WTA loss.
///
/// Hypotheses start as small seeded perturbations of the label mean, so the
/// assignment can split them across modes. Divergence means the loss rose
/// above its value `patience` steps earlier; the run stops there.
inline FitResult fit_hypotheses(const LabelSet &labels, const LossConfig &cfg, const FitOptions &opt) {
  cfg.validate();
  require(opt.modes >= 1, "need at least one hypothesis");
  require(!labels.trajectories.empty(), "need at least one label");

  TrajectoryMatrix mean = TrajectoryMatrix::Zero();
  for (const auto &e : labels.trajectories) mean += e;
  mean /= static_cast<double>(labels.trajectories.size());
  double spread = 0.0;
  for (const auto &e : labels.trajectories) spread += (e - mean).squaredNorm();
  spread = std::sqrt(spread / static_cast<double>(labels.trajectories.size() * kHorizonSamples));

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  FitResult out;
  out.hypotheses.trajectories.assign(opt.modes, mean);
  out.hypotheses.costs.assign(opt.modes, 0.0);
  const double jitter = 0.1 * spread + 1e-3;
  for (auto &h : out.hypotheses.trajectories)
    for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] += jitter * gauss(rng);

  const double step = opt.step_size > 0.0 ? opt.step_size : 0.25 / static_cast<double>(labels.trajectories.size());
  for (std::size_t s = 0; s < opt.steps; ++s) {
    const auto lg = rwta_loss(labels, out.hypotheses, cfg);
    out.trace.push_back(lg.loss);
    if (s >= opt.patience && lg.loss > out.trace[s - opt.patience] * (1.0 + 1e-12) + 1e-300) {
      out.diverged = true;
      return out;
    }
    for (std::size_t k = 0; k < opt.modes; ++k) out.hypotheses.trajectories[k] -= step * lg.gradient[k];
  }
  out.trace.push_back(rwta_loss(labels, out.hypotheses, cfg).loss);
  return out;
}

/// Labels scattered around two lateral modes at +/- spread (y axis) of a straight 3 m/s line.
inline LabelSet make_bimodal_labels(std::size_t per_cluster, double spread, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  LabelSet labels;
  for (const double side : {1.0, -1.0}) {
    for (std::size_t n = 0; n < per_cluster; ++n) {
      TrajectoryMatrix m;
      for (int i = 0; i < kHorizonSamples; ++i) {
        const double t = (i + 1) * kSampleDt;
        m.row(i) << 3.0 * t + noise * gauss(rng), side * spread + noise * gauss(rng), noise * gauss(rng);
      }
      labels.trajectories.push_back(m);
    }
  }
  return labels;
}

/// Index of the hypothesis to execute.
///
/// Candidates are hypotheses with c* / c_k >= 0.95 where c* = min c_k (all
/// zero-cost hypotheses when c* = 0). Among them the one whose quintic
/// projection has the lowest snap cost wins; ties go to the lower index.
inline std::size_t select_for_execution(const HypothesisSet &hyps, const InitialState &init = {}) {
  require(hyps.size() >= 1, "need at least one hypothesis");
  require(hyps.costs.size() == hyps.size(), "one cost per hypothesis is required");
  for (double c : hyps.costs) require(c >= 0.0 && std::isfinite(c), "hypothesis costs must be non-negative");
  const double c_star = *std::min_element(hyps.costs.begin(), hyps.costs.end());

  std::size_t best = hyps.size();
  double best_snap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < hyps.size(); ++k) {
    const double c = hyps.costs[k];
    const bool candidate = c_star == 0.0 ? c == 0.0 : c_star / c >= 0.95;
    if (!candidate) continue;
    const double snap = snap_cost(project_quintic(to_trajectory(hyps.trajectories[k]), init));
    if (snap < best_snap) {
      best_snap = snap;
      best = k;
    }
  }
  return best;
}

}  // namespace mhplan
