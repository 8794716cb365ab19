#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace mhplan {

/// Static 3-d tree over a point set. Exact nearest-neighbour queries.
///
/// The tree stores indices into the point array it was built from; the
/// caller keeps the points alive (PointCloud owns both).
class KdTree3 {
public:
  KdTree3() = default;

  explicit KdTree3(std::span<const Eigen::Vector3d> points) : points_(points) {
    index_.resize(points.size());
    std::iota(index_.begin(), index_.end(), 0u);
    nodes_.reserve(points.size() / kLeafSize * 2 + 1);
    if (!points.empty()) build(0, static_cast<std::uint32_t>(points.size()));
  }

  [[nodiscard]] bool empty() const noexcept { return index_.empty(); }

  /// Squared distance to the nearest point, or `bound2` if nothing closer exists.
  [[nodiscard]] double nearest_squared(const Eigen::Vector3d &q,
                                       double bound2 = std::numeric_limits<double>::infinity()) const {
    if (nodes_.empty()) return bound2;
    double best = bound2;
    search(0, q, best);
    return best;
  }

private:
  static constexpr std::uint32_t kLeafSize = 8;
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

  struct Node {
    std::uint32_t begin = 0, end = 0;  // leaf range into index_
    std::uint32_t left = kNone, right = kNone;
    int axis = -1;
    double split = 0.0;
    Eigen::Vector3d lo, hi;  // bounding box
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector3d hi = -lo;
    for (std::uint32_t i = begin; i < end; ++i) {
      lo = lo.cwiseMin(points_[index_[i]]);
      hi = hi.cwiseMax(points_[index_[i]]);
    }
    nodes_[id].lo = lo;
    nodes_[id].hi = hi;
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    if (end - begin <= kLeafSize) return id;

    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
    const double split = points_[index_[mid]][axis];
    const std::uint32_t left = build(begin, mid);
    const std::uint32_t right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  static double box_distance2(const Node &n, const Eigen::Vector3d &q) {
    double d2 = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double excess = std::max({n.lo[k] - q[k], 0.0, q[k] - n.hi[k]});
      d2 += excess * excess;
    }
    return d2;
  }

  void search(std::uint32_t id, const Eigen::Vector3d &q, double &best) const {
    const Node &n = nodes_[id];
    if (box_distance2(n, q) >= best) return;
    if (n.axis < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) best = std::min(best, (points_[index_[i]] - q).squaredNorm());
      return;
    }
    const bool go_left = q[n.axis] < n.split;
    search(go_left ? n.left : n.right, q, best);
    search(go_left ? n.right : n.left, q, best);
  }

  std::span<const Eigen::Vector3d> points_;
  std::vector<std::uint32_t> index_;
  std::vector<Node> nodes_;
};

}  // namespace mhplan
