#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "mhplan/geometry.hpp"
#include "mhplan/trajectory.hpp"

namespace mhplan {

/// A benchmark world: obstacles, the reference to follow, and the goal.
struct Scenario {
  PointCloud cloud;
  DiscreteTrajectory reference;  // starts at t = 0, 0.1 s spacing
  Point3 goal = Point3::Zero();
  double goal_radius = 5.0;
  InitialState start;
};

// ---------------------------------------------------------------------------
// Reference trajectories

/// Polyline traversed at constant speed, sampled every 0.1 s from t = 0.
/// The final sample sits exactly on the last vertex.
inline DiscreteTrajectory resample_path(std::span<const Point3> path, double speed) {
  require(!path.empty(), "cannot resample an empty path");
  require(speed > 0.0, "resampling speed must be positive");
  std::vector<double> arc(path.size(), 0.0);
  for (std::size_t i = 1; i < path.size(); ++i) arc[i] = arc[i - 1] + (path[i] - path[i - 1]).norm();
  const double total = arc.back();
  const double step = speed * kSampleDt;
  const auto n = static_cast<std::size_t>(std::ceil(total / step - 1e-9));

  std::vector<TrajectorySample> samples;
  samples.reserve(n + 1);
  std::size_t seg = 0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double s = std::min(static_cast<double>(k) * step, total);
    while (seg + 2 < path.size() && arc[seg + 1] < s) ++seg;
    Point3 p = path[seg];
    if (seg + 1 < path.size()) {
      const double len = arc[seg + 1] - arc[seg];
      const double u = len > 0.0 ? std::clamp((s - arc[seg]) / len, 0.0, 1.0) : 0.0;
      p = path[seg] + u * (path[seg + 1] - path[seg]);
    }
    samples.push_back({static_cast<double>(k) * kSampleDt, p, std::nullopt, std::nullopt});
  }
  return DiscreteTrajectory(std::move(samples));
}

/// Same geometric path, re-timed to a new constant speed.
inline DiscreteTrajectory retime(const DiscreteTrajectory &reference, double speed) {
  const auto pts = reference.positions();
  return resample_path(pts, speed);
}

inline DiscreteTrajectory straight_reference(const Point3 &start, const Vec3 &direction, double length, double speed) {
  require(length > 0.0, "reference length must be positive");
  require(direction.norm() > 0.0, "reference direction must be non-zero");
  const std::array<Point3, 2> path{start, start + direction.normalized() * length};
  return resample_path(path, speed);
}

/// Horizontal circle through `start`, centred `radius` to the left of the initial heading (+x).
inline DiscreteTrajectory circle_reference(const Point3 &start, double radius, double speed, double laps = 1.0) {
  require(radius > 0.0 && laps > 0.0, "circle radius and laps must be positive");
  const Point3 center = start + Vec3(0.0, radius, 0.0);
  const double circumference = 2.0 * std::numbers::pi * radius * laps;
  const int segments = std::max(16, static_cast<int>(std::ceil(circumference / 0.05)));
  std::vector<Point3> path;
  path.reserve(static_cast<std::size_t>(segments) + 1);
  for (int i = 0; i <= segments; ++i) {
    const double a = -std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * laps * i / segments;
    path.push_back(center + radius * Vec3(std::cos(a), std::sin(a), 0.0));
  }
  return resample_path(path, speed);
}

// ---------------------------------------------------------------------------
// Surface sampling

/// Side surface of a vertical (elliptic) cylinder standing on z = z0, plus optional caps.
inline void sample_cylinder(std::vector<Point3> &out, const Point3 &base_center, double radius_x, double radius_y,
                            double height, double spacing, bool caps) {
  const double perimeter = std::numbers::pi * (3.0 * (radius_x + radius_y) -
                                               std::sqrt((3.0 * radius_x + radius_y) * (radius_x + 3.0 * radius_y)));
  const int n_around = std::max(8, static_cast<int>(std::ceil(perimeter / spacing)));
  const int n_up = std::max(1, static_cast<int>(std::ceil(height / spacing)));
  for (int k = 0; k <= n_up; ++k) {
    const double z = base_center.z() + height * k / n_up;
    for (int j = 0; j < n_around; ++j) {
      const double a = 2.0 * std::numbers::pi * j / n_around;
      out.emplace_back(base_center.x() + radius_x * std::cos(a), base_center.y() + radius_y * std::sin(a), z);
    }
  }
  if (!caps) return;
  const int n_rings = std::max(1, static_cast<int>(std::ceil(std::max(radius_x, radius_y) / spacing)));
  for (const double z : {base_center.z(), base_center.z() + height}) {
    out.emplace_back(base_center.x(), base_center.y(), z);
    for (int r = 1; r < n_rings; ++r) {
      const double f = static_cast<double>(r) / n_rings;
      const int n = std::max(6, static_cast<int>(std::ceil(2.0 * std::numbers::pi * f * std::max(radius_x, radius_y) / spacing)));
      for (int j = 0; j < n; ++j) {
        const double a = 2.0 * std::numbers::pi * j / n;
        out.emplace_back(base_center.x() + f * radius_x * std::cos(a), base_center.y() + f * radius_y * std::sin(a), z);
      }
    }
  }
}

/// Six faces of an axis-aligned box, each covered by a regular grid.
inline void sample_cuboid(std::vector<Point3> &out, const Point3 &lo, const Point3 &hi, double spacing) {
  const Vec3 size = hi - lo;
  std::array<int, 3> n{};
  for (int k = 0; k < 3; ++k) n[static_cast<std::size_t>(k)] = std::max(1, static_cast<int>(std::ceil(size[k] / spacing)));
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3, v = (axis + 2) % 3;
    for (const double fixed : {lo[axis], hi[axis]}) {
      for (int i = 0; i <= n[static_cast<std::size_t>(u)]; ++i) {
        for (int j = 0; j <= n[static_cast<std::size_t>(v)]; ++j) {
          Point3 p;
          p[axis] = fixed;
          p[u] = lo[u] + size[u] * i / n[static_cast<std::size_t>(u)];
          p[v] = lo[v] + size[v] * j / n[static_cast<std::size_t>(v)];
          out.push_back(p);
        }
      }
    }
  }
}

/// Ellipsoid surface on a latitude/longitude grid fine enough for the largest semi-axis.
inline void sample_ellipsoid(std::vector<Point3> &out, const Point3 &center, const Vec3 &semi_axes, double spacing) {
  const double r_max = semi_axes.maxCoeff();
  const int n_lat = std::max(4, static_cast<int>(std::ceil(std::numbers::pi * r_max / spacing)));
  for (int i = 0; i <= n_lat; ++i) {
    const double polar = std::numbers::pi * i / n_lat;
    const double ring = std::sin(polar);
    const int n_lon = std::max(1, static_cast<int>(std::ceil(2.0 * std::numbers::pi * r_max * ring / spacing)));
    for (int j = 0; j < n_lon; ++j) {
      const double az = 2.0 * std::numbers::pi * j / n_lon;
      out.emplace_back(center.x() + semi_axes.x() * ring * std::cos(az), center.y() + semi_axes.y() * ring * std::sin(az),
                       center.z() + semi_axes.z() * std::cos(polar));
    }
  }
}

// ---------------------------------------------------------------------------
// Forest

struct ForestSpec {
  double length = 60.0;  // along x
  double width = 30.0;   // along y
  double intensity = 1.0 / 25.0;  // trees per m^2
  double tree_diameter = 0.6;
  double tree_height = 8.0;
  double flight_height = 2.0;
  double reference_length = 40.0;
  double reference_speed = 3.0;
  double start_clearance = 1.0;  // no trunk closer than this to the start position
  double surface_spacing = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    require(intensity > 0.0, "forest intensity must be positive");
    require(length > 0.0 && width > 0.0, "forest extents must be positive");
    require(tree_diameter > 0.0 && tree_height > 0.0, "tree dimensions must be positive");
    require(surface_spacing > 0.0, "surface spacing must be positive");
  }

  /// Start at the region corner (-l/2, -w/2); the origin is the region centre.
  [[nodiscard]] Point3 start_position() const { return {-length / 2.0, -width / 2.0, flight_height}; }
};

/// Poisson count, then uniform placement. Trunks that would cover the start are redrawn,
/// which keeps the count distribution intact.
inline std::vector<Point3> sample_tree_centers(const ForestSpec &spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::poisson_distribution<int> count(spec.intensity * spec.length * spec.width);
  std::uniform_real_distribution<double> ux(-spec.length / 2.0, spec.length / 2.0);
  std::uniform_real_distribution<double> uy(-spec.width / 2.0, spec.width / 2.0);
  const int n = count(rng);
  const Point3 start = spec.start_position();
  const double keep_out = spec.start_clearance + spec.tree_diameter / 2.0;
  std::vector<Point3> centers;
  centers.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Point3 c;
    do {
      c = Point3(ux(rng), uy(rng), 0.0);
    } while ((c.head<2>() - start.head<2>()).norm() < keep_out);
    centers.push_back(c);
  }
  return centers;
}

inline Scenario gen_forest(const ForestSpec &spec) {
  const auto centers = sample_tree_centers(spec);
  std::vector<Point3> pts;
  const double r = spec.tree_diameter / 2.0;
  for (const auto &c : centers) sample_cylinder(pts, c, r, r, spec.tree_height, spec.surface_spacing, false);

  Scenario sc;
  sc.cloud = PointCloud(std::move(pts));
  sc.start.position = spec.start_position();
  // Straight line from the corner towards the region centre.
  const Vec3 dir = Vec3(spec.length, spec.width, 0.0).normalized();
  sc.reference = straight_reference(sc.start.position, dir, spec.reference_length, spec.reference_speed);
  sc.start.velocity = spec.reference_speed * dir;
  sc.goal = sc.reference[sc.reference.size() - 1].position;
  return sc;
}

// ---------------------------------------------------------------------------
// Convex shapes

enum class ShapeKind { ellipsoid, cuboid, cylinder };

struct ShapeInstance {
  ShapeKind kind = ShapeKind::cuboid;
  Point3 center = Point3::Zero();  // geometric centre; shapes rest on z = 0
  Vec3 extent = Vec3::Ones();      // full size along x, y, z
};

struct ShapeFieldSpec {
  double length = 60.0;
  double width = 30.0;
  double intensity = 1.0 / 25.0;
  Vec3 extent_low{0.5, 0.5, 0.5};
  Vec3 extent_high{4.0, 4.0, 8.0};
  std::vector<ShapeKind> kinds{ShapeKind::ellipsoid, ShapeKind::cuboid, ShapeKind::cylinder};
  double flight_height = 2.0;
  double reference_length = 40.0;
  double reference_speed = 3.0;
  double start_clearance = 1.0;
  double surface_spacing = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    require(intensity >= 0.0, "shape intensity must be non-negative");
    require(length > 0.0 && width > 0.0, "region extents must be positive");
    require((extent_low.array() > 0.0).all() && (extent_low.array() < extent_high.array()).all(),
            "shape extent bounds must satisfy 0 < low < high");
    require(!kinds.empty(), "at least one shape kind is required");
    require(surface_spacing > 0.0, "surface spacing must be positive");
  }

  [[nodiscard]] Point3 start_position() const { return {-length / 2.0, -width / 2.0, flight_height}; }
};

inline std::vector<ShapeInstance> sample_shapes(const ShapeFieldSpec &spec) {
  spec.validate();
  if (spec.intensity == 0.0) return {};
  std::mt19937_64 rng(spec.seed);
  std::poisson_distribution<int> count(spec.intensity * spec.length * spec.width);
  std::uniform_real_distribution<double> ux(-spec.length / 2.0, spec.length / 2.0);
  std::uniform_real_distribution<double> uy(-spec.width / 2.0, spec.width / 2.0);
  std::uniform_int_distribution<std::size_t> kind(0, spec.kinds.size() - 1);
  std::array<std::uniform_real_distribution<double>, 3> ext{
      std::uniform_real_distribution<double>(spec.extent_low.x(), spec.extent_high.x()),
      std::uniform_real_distribution<double>(spec.extent_low.y(), spec.extent_high.y()),
      std::uniform_real_distribution<double>(spec.extent_low.z(), spec.extent_high.z())};
  const Point3 start = spec.start_position();
  const int n = count(rng);
  std::vector<ShapeInstance> shapes;
  shapes.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    ShapeInstance s;
    s.kind = spec.kinds[kind(rng)];
    s.extent = Vec3(ext[0](rng), ext[1](rng), ext[2](rng));
    const double keep_out = spec.start_clearance + 0.5 * s.extent.head<2>().norm();
    do {
      s.center = Point3(ux(rng), uy(rng), s.extent.z() / 2.0);
    } while ((s.center.head<2>() - start.head<2>()).norm() < keep_out);
    shapes.push_back(s);
  }
  return shapes;
}

inline void render_shape(std::vector<Point3> &out, const ShapeInstance &s, double spacing) {
  const Vec3 half = s.extent / 2.0;
  switch (s.kind) {
  case ShapeKind::cuboid:
    sample_cuboid(out, s.center - half, s.center + half, spacing);
    break;
  case ShapeKind::ellipsoid:
    sample_ellipsoid(out, s.center, half, spacing);
    break;
  case ShapeKind::cylinder:
    sample_cylinder(out, Point3(s.center.x(), s.center.y(), s.center.z() - half.z()), half.x(), half.y(), s.extent.z(),
                    spacing, true);
    break;
  }
}

inline Scenario gen_shapes(const ShapeFieldSpec &spec) {
  const auto shapes = sample_shapes(spec);
  std::vector<Point3> pts;
  for (const auto &s : shapes) render_shape(pts, s, spec.surface_spacing);
  Scenario sc;
  sc.cloud = PointCloud(std::move(pts));
  sc.start.position = spec.start_position();
  const Vec3 dir = Vec3(spec.length, spec.width, 0.0).normalized();
  sc.reference = straight_reference(sc.start.position, dir, spec.reference_length, spec.reference_speed);
  sc.start.velocity = spec.reference_speed * dir;
  sc.goal = sc.reference[sc.reference.size() - 1].position;
  return sc;
}

// ---------------------------------------------------------------------------
// Wall with a single vertical gap

/// The vehicle starts at the origin heading +x; the wall lies in the plane
/// x = wall_distance, centred on the gap at y = lateral_offset.
struct GapWallSpec {
  double wall_length = 50.0;
  double wall_height = 8.0;
  std::optional<double> gap_width;       // drawn from the test or training range when unset
  std::optional<double> lateral_offset;  // drawn from U(-5, 5) when unset
  bool training_draw = false;            // U(0.7, 1.2) instead of U(0.8, 1.0)
  double wall_distance = 10.0;
  double reference_length = 20.0;
  double flight_height = 2.0;
  double reference_speed = 3.0;
  double surface_spacing = 0.1;
  std::uint64_t seed = 0;
};

struct GapWallLayout {
  double gap_width = 0.0;
  double lateral_offset = 0.0;
};

inline GapWallLayout resolve_gap_layout(const GapWallSpec &spec) {
  std::mt19937_64 rng(spec.seed);
  GapWallLayout layout;
  std::uniform_real_distribution<double> gap(spec.training_draw ? 0.7 : 0.8, spec.training_draw ? 1.2 : 1.0);
  std::uniform_real_distribution<double> offset(-5.0, 5.0);
  const double drawn_gap = gap(rng);
  const double drawn_offset = offset(rng);
  layout.gap_width = spec.gap_width.value_or(drawn_gap);
  layout.lateral_offset = spec.lateral_offset.value_or(drawn_offset);
  require(layout.gap_width > 0.0 && layout.gap_width < spec.wall_length, "gap width must be in (0, wall_length)");
  require(spec.wall_height > 0.0 && spec.wall_distance > 0.0, "wall height and distance must be positive");
  require(spec.surface_spacing > 0.0, "surface spacing must be positive");
  return layout;
}

inline Scenario gen_gap_wall(const GapWallSpec &spec) {
  const auto layout = resolve_gap_layout(spec);
  const double x = spec.wall_distance;
  const double y0 = layout.lateral_offset - spec.wall_length / 2.0;
  const double y1 = layout.lateral_offset + spec.wall_length / 2.0;
  const double gap_lo = layout.lateral_offset - layout.gap_width / 2.0;
  const double gap_hi = layout.lateral_offset + layout.gap_width / 2.0;
  const int n_up = std::max(1, static_cast<int>(std::ceil(spec.wall_height / spec.surface_spacing)));

  std::vector<Point3> pts;
  auto panel = [&](double a, double b) {
    if (b - a <= 0.0) return;
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / spec.surface_spacing)));
    for (int i = 0; i <= n; ++i)
      for (int k = 0; k <= n_up; ++k) pts.emplace_back(x, a + (b - a) * i / n, spec.wall_height * k / n_up);
  };
  panel(y0, gap_lo);
  panel(gap_hi, y1);

  Scenario sc;
  sc.cloud = PointCloud(std::move(pts));
  sc.start.position = Point3(0.0, 0.0, spec.flight_height);
  sc.reference = straight_reference(sc.start.position, Vec3::UnitX(), spec.reference_length, spec.reference_speed);
  sc.start.velocity = spec.reference_speed * Vec3::UnitX();
  sc.goal = sc.reference[sc.reference.size() - 1].position;
  return sc;
}

// ---------------------------------------------------------------------------
// Single pole

/// Vertical pole straddling a straight +x reference from the origin.
struct PoleSpec {
  double distance = 6.0;  // start to pole axis
  double diameter = 1.5;
  double height = 8.0;
  double lateral_offset = 0.0;
  double reference_length = 20.0;
  double flight_height = 2.0;
  double reference_speed = 3.0;
  double surface_spacing = 0.1;
};

inline Scenario gen_pole(const PoleSpec &spec) {
  require(spec.diameter > 0.0 && spec.height > 0.0 && spec.distance > 0.0, "pole dimensions must be positive");
  std::vector<Point3> pts;
  const double r = spec.diameter / 2.0;
  sample_cylinder(pts, Point3(spec.distance, spec.lateral_offset, 0.0), r, r, spec.height, spec.surface_spacing, false);
  Scenario sc;
  sc.cloud = PointCloud(std::move(pts));
  sc.start.position = Point3(0.0, 0.0, spec.flight_height);
  sc.reference = straight_reference(sc.start.position, Vec3::UnitX(), spec.reference_length, spec.reference_speed);
  sc.start.velocity = spec.reference_speed * Vec3::UnitX();
  sc.goal = sc.reference[sc.reference.size() - 1].position;
  return sc;
}

}  // namespace mhplan
