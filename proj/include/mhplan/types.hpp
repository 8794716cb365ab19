#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace mhplan {

using Point3 = Eigen::Vector3d;
using Vec3 = Eigen::Vector3d;

/// Sample spacing of every discretized trajectory, in seconds.
inline constexpr double kSampleDt = 0.1;
/// Number of samples in a one-second planning horizon (t = 0.1 ... 1.0).
inline constexpr int kHorizonSamples = 10;

/// Thrown when an argument violates an operation's precondition.
class InputError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

inline bool all_finite(const Vec3 &v) { return v.allFinite(); }

inline void require(bool condition, const std::string &message) {
  if (!condition) throw InputError(message);
}

}  // namespace mhplan
