#include <gtest/gtest.h>

#include <chrono>

#include "mhplan/feasibility.hpp"

using namespace mhplan;

namespace {

// Avoidable speed written out independently: detection range over the total reaction time.
double speed_formula(double phi, double t_p) {
  const double J = 0.007, T = 1.02, c = 35.3, r = 0.95, s = 6.0, t_s = 0.066;
  return s / (t_s + t_p + std::sqrt(2 * phi * J / T) + std::sqrt(2 * r / (c * std::sin(phi))));
}

double golden_argmax(double t_p) {
  double a = 1e-3, b = std::numbers::pi / 2;
  const double g = (std::sqrt(5.0) - 1) / 2;
  for (int i = 0; i < 200; ++i) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (speed_formula(c, t_p) > speed_formula(d, t_p)) b = d;
    else a = c;
  }
  return 0.5 * (a + b);
}

}  // namespace

TEST(Feasibility, ReferenceLatencies) {
  const VehicleParams v;
  const auto start = std::chrono::steady_clock::now();
  const std::array<double, 3> t_p{0.0652, 0.0191, 0.0103};
  const std::array<double, 3> v_max{12.0, 13.2, 13.5};
  for (std::size_t i = 0; i < 3; ++i) {
    SensingParams sp;
    sp.t_p = t_p[i];
    const auto best = optimize_phi(v, sp);
    EXPECT_NEAR(rad_to_deg(best.phi), 65.5, 0.5);
    EXPECT_NEAR(best.t_rot * 1e3, 125.2, 0.5);
    EXPECT_NEAR(best.v_max, v_max[i], 0.05);
  }
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 1.0);
}

TEST(Feasibility, GridOptimumMatchesContinuousOptimum) {
  for (double t_p : {0.0, 0.01, 0.05, 0.2}) {
    SensingParams sp;
    sp.t_p = t_p;
    const auto best = optimize_phi(VehicleParams{}, sp, deg_to_rad(0.01));
    const double phi = golden_argmax(t_p);
    EXPECT_NEAR(best.phi, phi, deg_to_rad(0.02));
    EXPECT_NEAR(best.v_max, speed_formula(phi, t_p), 1e-6);
    EXPECT_NEAR(max_speed(VehicleParams{}, sp, 1.0), speed_formula(1.0, t_p), 1e-12);
  }
}

TEST(Feasibility, RotationLatency) {
  const VehicleParams v;
  EXPECT_NEAR(rot_latency(v, std::numbers::pi / 2), std::sqrt(std::numbers::pi * 0.007 / 1.02), 1e-15);
  EXPECT_THROW(rot_latency(v, 0.0), InputError);
  EXPECT_THROW(rot_latency(v, 2.0), InputError);
}

TEST(Feasibility, ZeroLatencyIsFinite) {
  SensingParams sp;
  sp.t_s = sp.t_p = 0.0;
  const auto best = optimize_phi(VehicleParams{}, sp);
  EXPECT_TRUE(std::isfinite(best.v_max));
  EXPECT_GT(best.v_max, 13.5);
}

TEST(Feasibility, InvalidParametersRejected) {
  VehicleParams v;
  v.J = 0.0;
  EXPECT_THROW(optimize_phi(v, SensingParams{}), InputError);
  SensingParams sp;
  sp.s = 0.5;
  EXPECT_THROW(optimize_phi(VehicleParams{}, sp), InputError);
  EXPECT_THROW(optimize_phi(VehicleParams{}, SensingParams{}, 0.0), InputError);
}

TEST(Feasibility, SlowerProcessingLowersSpeed) {
  double prev = 1e9;
  for (double t_p : {0.0, 0.01, 0.02, 0.05, 0.1}) {
    SensingParams sp;
    sp.t_p = t_p;
    const double vmax = optimize_phi(VehicleParams{}, sp).v_max;
    EXPECT_LT(vmax, prev);
    prev = vmax;
  }
}
