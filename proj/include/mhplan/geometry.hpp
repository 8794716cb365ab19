#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "mhplan/kd_tree.hpp"
#include "mhplan/trajectory.hpp"
#include "mhplan/types.hpp"

namespace mhplan {

/// Immutable obstacle point set with an exact nearest-neighbour index.
///
/// Copies share the underlying storage, so a cloud can be handed to many
/// concurrent readers cheaply.
class PointCloud {
public:
  PointCloud() : data_(std::make_shared<const Data>(std::vector<Point3>{})) {}

  explicit PointCloud(std::vector<Point3> points) {
    for (const auto &p : points) require(all_finite(p), "point cloud contains a non-finite point");
    data_ = std::make_shared<const Data>(std::move(points));
  }

  [[nodiscard]] std::span<const Point3> points() const noexcept { return data_->points; }
  [[nodiscard]] std::size_t size() const noexcept { return data_->points.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_->points.empty(); }

  /// Distance to the closest point, or nullopt for an empty cloud.
  [[nodiscard]] std::optional<double> nearest_distance(const Point3 &p) const {
    if (empty()) return std::nullopt;
    return std::sqrt(data_->tree.nearest_squared(p));
  }

  /// Distance to the closest point if it is below `bound`, otherwise `bound`.
  /// Much cheaper than an unbounded query when most queries are far from obstacles.
  [[nodiscard]] double nearest_distance_bounded(const Point3 &p, double bound) const {
    if (empty()) return bound;
    return std::sqrt(data_->tree.nearest_squared(p, bound * bound));
  }

private:
  struct Data {
    explicit Data(std::vector<Point3> pts) : points(std::move(pts)), tree(std::span<const Point3>(points)) {}
    Data(const Data &) = delete;
    Data &operator=(const Data &) = delete;
    std::vector<Point3> points;
    KdTree3 tree;
  };
  std::shared_ptr<const Data> data_;
};

/// Minimum Euclidean distance from `p` to the cloud; nullopt means "no obstacles".
inline std::optional<double> nearest_distance(const PointCloud &cloud, const Point3 &p) {
  return cloud.nearest_distance(p);
}

/// Vehicle modelled as a sphere of radius r_q.
struct CollisionModel {
  double r_q = 0.2;

  CollisionModel() = default;
  explicit CollisionModel(double radius) : r_q(radius) { require(radius > 0.0, "vehicle radius must be positive"); }

  /// Distance beyond which the collision cost vanishes.
  [[nodiscard]] double influence_radius() const noexcept { return 2.0 * r_q; }
};

/// Truncated quadratic penalty: 4 - d^2 / r_q^2 inside 2 r_q, zero beyond.
inline double collision_cost(const CollisionModel &model, double d_c) {
  require(d_c >= 0.0, "obstacle distance must be non-negative");
  if (d_c > 2.0 * model.r_q) return 0.0;
  return -(d_c * d_c) / (model.r_q * model.r_q) + 4.0;
}

/// True if any of the given positions lies closer than r_q to the cloud.
inline bool in_collision(const PointCloud &cloud, const CollisionModel &model, std::span<const Point3> positions) {
  if (cloud.empty()) return false;
  for (const auto &p : positions)
    if (cloud.nearest_distance_bounded(p, model.r_q) < model.r_q) return true;
  return false;
}

/// Sampled collision check; only the stored samples are tested, not the sweep between them.
inline bool in_collision(const PointCloud &cloud, const CollisionModel &model, const DiscreteTrajectory &traj) {
  require(!traj.empty(), "collision check needs at least one sample");
  const auto pos = traj.positions();
  return in_collision(cloud, model, std::span<const Point3>(pos));
}

}  // namespace mhplan
