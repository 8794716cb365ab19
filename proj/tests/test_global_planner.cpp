#include <gtest/gtest.h>

#include <queue>
#include <random>

#include "mhplan/global_planner.hpp"
#include "oracles.hpp"

using namespace mhplan;

namespace {

using Cell = OccupancyGrid::Cell;

double step_length(const Cell &a, const Cell &b) {
  const int d = std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) + std::abs(a[2] - b[2]);
  return std::sqrt(static_cast<double>(d));
}

// Plain Dijkstra over the 26-neighbourhood.
double dijkstra_cost(const OccupancyGrid &g, const Cell &s, const Cell &t) {
  std::vector<double> dist(g.size(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[g.index(s)] = 0.0;
  pq.emplace(0.0, g.index(s));
  while (!pq.empty()) {
    const auto [d, i] = pq.top();
    pq.pop();
    if (d > dist[i]) continue;
    const Cell c = g.cell_of(i);
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          const Cell n{c[0] + dx, c[1] + dy, c[2] + dz};
          if ((dx | dy | dz) == 0 || g.occupied(n)) continue;
          const double nd = d + step_length(c, n);
          if (nd < dist[g.index(n)]) {
            dist[g.index(n)] = nd;
            pq.emplace(nd, g.index(n));
          }
        }
  }
  return dist[g.index(t)];
}

std::vector<Point3> densify(const std::vector<Point3> &wps, double step) {
  std::vector<Point3> out;
  for (std::size_t i = 0; i + 1 < wps.size(); ++i) {
    const int n = std::max(1, static_cast<int>(std::ceil((wps[i + 1] - wps[i]).norm() / step)));
    for (int k = 0; k < n; ++k) out.push_back(wps[i] + (wps[i + 1] - wps[i]) * (static_cast<double>(k) / n));
  }
  out.push_back(wps.back());
  return out;
}

}  // namespace

TEST(GlobalPlanner, EmptySpaceIsStraight) {
  Scenario sc;
  sc.start.position = Point3(0, 0, 2);
  sc.goal = Point3(12, 3, 2);
  sc.reference = straight_reference(sc.start.position, sc.goal - sc.start.position, 12.37, 3.0);
  const auto plan = global_plan(sc);
  ASSERT_FALSE(plan.blocked);
  ASSERT_EQ(plan.waypoints.size(), 2u);
  EXPECT_EQ(plan.waypoints.front(), sc.start.position);
  EXPECT_EQ(plan.waypoints.back(), sc.goal);
  EXPECT_TRUE(plan.trajectory.uniformly_spaced());
  EXPECT_NEAR(average_speed(plan.trajectory), 3.0, 0.3);
}

TEST(GlobalPlanner, ThreadsTheGap) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    GapWallSpec spec;
    spec.seed = seed;
    const auto layout = resolve_gap_layout(spec);
    const auto sc = gen_gap_wall(spec);
    const auto plan = global_plan(sc);
    ASSERT_FALSE(plan.blocked) << seed;
    const auto dense = densify(plan.waypoints, 0.02);
    EXPECT_FALSE(oracle::collides(sc.cloud.points(), dense, 0.2)) << seed;
    bool crossed = false;
    for (std::size_t i = 0; i + 1 < dense.size(); ++i)
      if (dense[i].x() < 10.0 && dense[i + 1].x() >= 10.0) {
        crossed = true;
        EXPECT_LT(std::abs(dense[i].y() - layout.lateral_offset), layout.gap_width / 2.0) << seed;
      }
    EXPECT_TRUE(crossed);
  }
}

TEST(GlobalPlanner, ClosedWallIsBlocked) {
  GapWallSpec spec;
  spec.gap_width = 0.1;
  spec.lateral_offset = 0.0;
  const auto plan = global_plan(gen_gap_wall(spec));
  EXPECT_TRUE(plan.blocked);
  EXPECT_TRUE(plan.waypoints.empty());
}

TEST(GlobalPlanner, AStarMatchesDijkstra) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Point3> pts;
    for (int i = 0; i < 60; ++i) pts.emplace_back(u(rng), u(rng), 0.5 * u(rng));
    const PointCloud cloud(pts);
    OccupancyGrid g(cloud, Point3::Zero(), Point3(4, 4, 2), 0.25, 0.3);
    const Cell s{0, 0, 0}, t{16, 16, 8};
    g.set_free(s);
    g.set_free(t);
    const auto path = grid_shortest_path(g, s, t);
    const double expected = dijkstra_cost(g, s, t);
    if (!std::isfinite(expected)) {
      EXPECT_TRUE(path.empty());
      continue;
    }
    ASSERT_FALSE(path.empty());
    double cost = 0.0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      EXPECT_FALSE(g.occupied(path[i + 1]));
      EXPECT_LE(step_length(path[i], path[i + 1]), std::sqrt(3.0) + 1e-12);
      cost += step_length(path[i], path[i + 1]);
    }
    EXPECT_NEAR(cost, expected, 1e-9);
  }
}

TEST(OccupancyGrid, InflationMarksNearbyCells) {
  const PointCloud cloud(std::vector<Point3>{Point3(1, 1, 1)});
  const OccupancyGrid g(cloud, Point3::Zero(), Point3(2, 2, 2), 0.25, 0.3);
  EXPECT_TRUE(g.occupied(g.locate(Point3(1, 1, 1))));
  EXPECT_TRUE(g.occupied(g.locate(Point3(1.25, 1, 1))));
  EXPECT_FALSE(g.occupied(g.locate(Point3(1.5, 1, 1))));
  EXPECT_TRUE(g.occupied({-1, 0, 0}));
}
