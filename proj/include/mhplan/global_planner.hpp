#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <vector>

#include "mhplan/environment.hpp"
#include "mhplan/geometry.hpp"

namespace mhplan {

struct GlobalPlannerOptions {
  double resolution = 0.25;  // cell edge, metres
  double xy_margin = 5.0;    // grid extends this far beyond start/goal horizontally
  double z_margin = 1.0;     // and this far vertically
  double inflation = 0.2;    // cells closer than this to a point are occupied (r_q)
  double speed = 0.0;        // resampling speed; <= 0 takes the scenario reference's average speed
  bool shortcut = true;      // straighten the grid path where the grid allows
};

struct GlobalPlan {
  bool blocked = true;
  bool collision_free = false;  // w.r.t. the inflated grid
  std::vector<Point3> waypoints;
  DiscreteTrajectory trajectory;  // waypoints resampled at 0.1 s
};

/// Inflated occupancy grid over an axis-aligned box.
class OccupancyGrid {
public:
  OccupancyGrid(const PointCloud &cloud, const Point3 &lo, const Point3 &hi, double resolution, double inflation)
      : origin_(lo), res_(resolution) {
    require(resolution > 0.0, "grid resolution must be positive");
    for (int k = 0; k < 3; ++k) dims_[k] = std::max(1, static_cast<int>(std::ceil((hi[k] - lo[k]) / resolution)) + 1);
    occupied_.assign(static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2], 0);
    if (cloud.empty()) return;
    for (int i = 0; i < dims_[0]; ++i)
      for (int j = 0; j < dims_[1]; ++j)
        for (int k = 0; k < dims_[2]; ++k)
          if (cloud.nearest_distance_bounded(center({i, j, k}), inflation) < inflation)
            occupied_[index({i, j, k})] = 1;
  }

  using Cell = std::array<int, 3>;

  [[nodiscard]] const std::array<int, 3> &dims() const noexcept { return dims_; }
  [[nodiscard]] std::size_t size() const noexcept { return occupied_.size(); }
  [[nodiscard]] double resolution() const noexcept { return res_; }

  [[nodiscard]] bool inside(const Cell &c) const noexcept {
    return c[0] >= 0 && c[1] >= 0 && c[2] >= 0 && c[0] < dims_[0] && c[1] < dims_[1] && c[2] < dims_[2];
  }
  [[nodiscard]] std::size_t index(const Cell &c) const noexcept {
    return (static_cast<std::size_t>(c[0]) * static_cast<std::size_t>(dims_[1]) + static_cast<std::size_t>(c[1])) *
               static_cast<std::size_t>(dims_[2]) +
           static_cast<std::size_t>(c[2]);
  }
  [[nodiscard]] Cell cell_of(std::size_t idx) const noexcept {
    const int k = static_cast<int>(idx % static_cast<std::size_t>(dims_[2]));
    idx /= static_cast<std::size_t>(dims_[2]);
    const int j = static_cast<int>(idx % static_cast<std::size_t>(dims_[1]));
    const int i = static_cast<int>(idx / static_cast<std::size_t>(dims_[1]));
    return {i, j, k};
  }
  [[nodiscard]] Cell locate(const Point3 &p) const noexcept {
    Cell c;
    for (int k = 0; k < 3; ++k) c[k] = static_cast<int>(std::lround((p[k] - origin_[k]) / res_));
    return c;
  }
  [[nodiscard]] Point3 center(const Cell &c) const noexcept {
    return origin_ + res_ * Vec3(c[0], c[1], c[2]);
  }
  [[nodiscard]] bool occupied(const Cell &c) const noexcept { return !inside(c) || occupied_[index(c)] != 0; }
  void set_free(const Cell &c) {
    if (inside(c)) occupied_[index(c)] = 0;
  }

  /// Every point along the segment falls in a free cell.
  [[nodiscard]] bool segment_free(const Point3 &a, const Point3 &b) const {
    const double len = (b - a).norm();
    const int n = std::max(1, static_cast<int>(std::ceil(len / (0.25 * res_))));
    for (int s = 0; s <= n; ++s)
      if (occupied(locate(a + (b - a) * (static_cast<double>(s) / n)))) return false;
    return true;
  }

private:
  Point3 origin_;
  double res_;
  std::array<int, 3> dims_{};
  std::vector<std::uint8_t> occupied_;
};

/// Shortest 26-connected path between two cells (A*, Euclidean heuristic).
/// Returns an empty vector when the goal is unreachable.
inline std::vector<OccupancyGrid::Cell> grid_shortest_path(const OccupancyGrid &grid, const OccupancyGrid::Cell &start,
                                                           const OccupancyGrid::Cell &goal) {
  using Cell = OccupancyGrid::Cell;
  if (grid.occupied(start) || grid.occupied(goal)) return {};
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> g(grid.size(), inf);
  std::vector<std::int64_t> parent(grid.size(), -1);
  std::vector<std::uint8_t> closed(grid.size(), 0);
  auto h = [&](const Cell &c) {
    return std::sqrt(static_cast<double>((c[0] - goal[0]) * (c[0] - goal[0]) + (c[1] - goal[1]) * (c[1] - goal[1]) +
                                         (c[2] - goal[2]) * (c[2] - goal[2])));
  };
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  const std::size_t s = grid.index(start), t = grid.index(goal);
  g[s] = 0.0;
  open.emplace(h(start), s);
  while (!open.empty()) {
    const auto [f, cur] = open.top();
    open.pop();
    if (closed[cur]) continue;
    closed[cur] = 1;
    if (cur == t) break;
    const Cell c = grid.cell_of(cur);
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          if (dx == 0 && dy == 0 && dz == 0) continue;
          const Cell n{c[0] + dx, c[1] + dy, c[2] + dz};
          if (grid.occupied(n)) continue;
          const std::size_t ni = grid.index(n);
          if (closed[ni]) continue;
          const double step = std::sqrt(static_cast<double>(dx * dx + dy * dy + dz * dz));
          if (g[cur] + step < g[ni]) {
            g[ni] = g[cur] + step;
            parent[ni] = static_cast<std::int64_t>(cur);
            open.emplace(g[ni] + h(n), ni);
          }
        }
  }
  if (!closed[t]) return {};
  std::vector<Cell> path;
  for (std::int64_t i = static_cast<std::int64_t>(t); i >= 0; i = parent[static_cast<std::size_t>(i)])
    path.push_back(grid.cell_of(static_cast<std::size_t>(i)));
  std::reverse(path.begin(), path.end());
  return path;
}

/// Average speed of a time-stamped reference.
inline double average_speed(const DiscreteTrajectory &reference) {
  if (reference.size() < 2) return 0.0;
  const double duration = reference[reference.size() - 1].t - reference[0].t;
  return duration > 0.0 ? reference.path_length() / duration : 0.0;
}

/// Collision-free start-to-goal path on an inflated grid, resampled at the scenario speed.
inline GlobalPlan global_plan(const Scenario &scenario, const GlobalPlannerOptions &opt = {}) {
  const Point3 &a = scenario.start.position;
  const Point3 &b = scenario.goal;
  Point3 lo = a.cwiseMin(b), hi = a.cwiseMax(b);
  lo.head<2>().array() -= opt.xy_margin;
  hi.head<2>().array() += opt.xy_margin;
  lo.z() -= opt.z_margin;
  hi.z() += opt.z_margin;

  OccupancyGrid grid(scenario.cloud, lo, hi, opt.resolution, opt.inflation);
  const auto s = grid.locate(a), t = grid.locate(b);
  grid.set_free(s);
  grid.set_free(t);
  const auto cells = grid_shortest_path(grid, s, t);

  GlobalPlan plan;
  if (cells.empty()) return plan;
  plan.blocked = false;
  plan.collision_free = true;

  std::vector<Point3> pts;
  pts.reserve(cells.size());
  for (const auto &c : cells) pts.push_back(grid.center(c));
  pts.front() = a;
  pts.back() = b;
  // Shortcuts must also keep the inflation distance from the raw points, not just pass through free cells.
  auto clear = [&](const Point3 &p, const Point3 &q) {
    if (scenario.cloud.empty()) return true;
    const int n = std::max(1, static_cast<int>(std::ceil((q - p).norm() / 0.02)));
    for (int k = 0; k <= n; ++k)
      if (scenario.cloud.nearest_distance_bounded(p + (q - p) * (static_cast<double>(k) / n), opt.inflation) < opt.inflation)
        return false;
    return true;
  };
  if (opt.shortcut && pts.size() > 2) {
    std::vector<Point3> out{pts.front()};
    std::size_t i = 0;
    while (i + 1 < pts.size()) {
      std::size_t j = pts.size() - 1;
      while (j > i + 1 && !(grid.segment_free(pts[i], pts[j]) && clear(pts[i], pts[j]))) --j;
      out.push_back(pts[j]);
      i = j;
    }
    pts = std::move(out);
  }
  plan.waypoints = pts;
  const double speed = opt.speed > 0.0 ? opt.speed : std::max(average_speed(scenario.reference), 1e-3);
  plan.trajectory = resample_path(pts, speed);
  return plan;
}

inline GlobalPlan global_plan(const Scenario &scenario, double grid_resolution) {
  GlobalPlannerOptions opt;
  opt.resolution = grid_resolution;
  return global_plan(scenario, opt);
}

}  // namespace mhplan
