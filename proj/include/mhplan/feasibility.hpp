#pragma once

#include <cmath>
#include <numbers>

#include "mhplan/types.hpp"

namespace mhplan {

struct VehicleParams {
  double J = 0.007;       // moment of inertia, kg m^2
  double T_max = 1.02;    // maximum torque, N m
  double c_max = 35.3;    // mass-normalised thrust, m/s^2
  double r_obs = 0.95;    // vehicle plus obstacle radius, m

  void validate() const {
    require(J > 0.0 && T_max > 0.0 && c_max > 0.0 && r_obs > 0.0, "vehicle parameters must be strictly positive");
  }
};

struct SensingParams {
  double s = 6.0;       // sensing range, m
  double t_s = 0.066;   // sensing latency, s
  double t_p = 0.0103;  // processing latency, s

  void validate(const VehicleParams &v) const {
    require(s >= 0.0 && t_s >= 0.0 && t_p >= 0.0, "sensing parameters must be non-negative");
    require(s > v.r_obs, "sensing range must exceed the combined obstacle radius");
  }
};

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Time to roll by phi under maximum torque (bang-bang from rest, half the angle accelerating).
inline double rot_latency(const VehicleParams &v, double phi) {
  v.validate();
  require(phi > 0.0 && phi <= std::numbers::pi / 2.0 + 1e-12, "roll angle must lie in (0, pi/2]");
  return std::sqrt(2.0 * phi * v.J / v.T_max);
}

/// Highest speed at which an obstacle detected at range s can still be avoided.
inline double max_speed(const VehicleParams &v, const SensingParams &sp, double phi) {
  sp.validate(v);
  const double lateral = std::sqrt(2.0 * v.r_obs / (std::sin(phi) * v.c_max));
  return sp.s / (sp.t_s + sp.t_p + rot_latency(v, phi) + lateral);
}

struct PhiOptimum {
  double phi = 0.0;  // radians
  double v_max = 0.0;
  double t_rot = 0.0;
};

/// Grid search over phi = step, 2 step, ... up to pi/2 (inclusive); ties keep the smaller angle.
inline PhiOptimum optimize_phi(const VehicleParams &v, const SensingParams &sp, double grid_step = deg_to_rad(0.1)) {
  require(grid_step > 0.0 && std::isfinite(grid_step), "grid step must be positive");
  const double half_pi = std::numbers::pi / 2.0;
  const auto n = static_cast<long>(std::floor(half_pi / grid_step + 1e-9));
  PhiOptimum best;
  for (long i = 1; i <= n; ++i) {
    const double phi = std::min(static_cast<double>(i) * grid_step, half_pi);
    const double speed = max_speed(v, sp, phi);
    if (speed > best.v_max) best = {phi, speed, rot_latency(v, phi)};
  }
  if (n == 0) best = {half_pi, max_speed(v, sp, half_pi), rot_latency(v, half_pi)};
  return best;
}

}  // namespace mhplan
