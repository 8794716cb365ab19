#include <gtest/gtest.h>

#include "mhplan/bench.hpp"

using namespace mhplan;

namespace {

Scenario open_line(double length = 30.0) {
  Scenario sc;
  sc.start = {Point3(0, 0, 2), Vec3(3, 0, 0), Vec3::Zero()};
  sc.reference = straight_reference(sc.start.position, Vec3::UnitX(), length, 3.0);
  sc.goal = sc.reference[sc.reference.size() - 1].position;
  return sc;
}

Scenario walled_line() {
  GapWallSpec spec;
  spec.gap_width = 0.9;
  spec.lateral_offset = 4.0;
  return gen_gap_wall(spec);
}

RunConfig blind_cfg() {
  RunConfig cfg;
  cfg.policy = Policy::blind;
  cfg.record_segments = true;
  return cfg;
}

}  // namespace

TEST(Rollout, BlindSucceedsInEmptySpace) {
  for (double v : {3.0, 7.0, 12.0}) {
    const auto r = rollout(open_line(), blind_cfg(), v, 0);
    EXPECT_EQ(r.outcome, Outcome::success) << v << " " << r.cause;
    EXPECT_NEAR(r.mean_speed, v, 0.05 * v);
    // Goal radius 5 m on a 30 m line.
    EXPECT_NEAR(r.flight_time, 25.0 / v, 0.15);
  }
}

TEST(Rollout, ClosedLoopIsNotDoneAtTheStart) {
  Scenario sc = open_line();
  sc.reference = circle_reference(sc.start.position, 6.0, 3.0);
  sc.goal = sc.reference[sc.reference.size() - 1].position;
  const auto r = rollout(sc, blind_cfg(), 3.0, 0);
  EXPECT_EQ(r.outcome, Outcome::success);
  EXPECT_GT(r.path_length, 0.5 * 2 * std::numbers::pi * 6.0);
}

TEST(Rollout, BlindHitsWall) {
  const auto r = rollout(walled_line(), blind_cfg(), 5.0, 0);
  EXPECT_EQ(r.outcome, Outcome::collision);
  EXPECT_NEAR(r.path.back().x(), 10.0, 0.25);
}

TEST(Rollout, SegmentsAreContinuousAndStartFromObservedState) {
  for (const auto policy : {Policy::blind, Policy::expert_local}) {
    auto cfg = blind_cfg();
    cfg.policy = policy;
    cfg.expert.total_samples = 2000;
    ForestSpec spec;
    spec.seed = 1;
    const auto r = rollout(gen_forest(spec), cfg, 5.0, 3);
    ASSERT_GE(r.segments.size(), 2u);
    for (std::size_t k = 0; k < r.segments.size(); ++k) {
      const auto &s = r.segments[k];
      EXPECT_LT((s.plan.position(0.0) - s.planned_from.position).norm(), 1e-9);
      EXPECT_LT((s.plan.velocity(0.0) - s.planned_from.velocity).norm(), 1e-9);
      EXPECT_LT((s.plan.acceleration(0.0) - s.planned_from.acceleration).norm(), 1e-9);
      EXPECT_GE(s.plan.beta, cfg.beta_min);
      EXPECT_LE(s.plan.beta, cfg.beta_max);
      if (k > 0) {
        const auto &prev = r.segments[k - 1].end;
        EXPECT_LT((s.start.position - prev.position).norm(), 1e-9);
        EXPECT_LT((s.start.velocity - prev.velocity).norm(), 1e-9);
        EXPECT_LT((s.start.acceleration - prev.acceleration).norm(), 1e-9);
      }
    }
  }
}

TEST(Rollout, NoiseSeparatesObservedAndTrueState) {
  auto cfg = blind_cfg();
  cfg.noise = NoiseModel{};
  const auto r = rollout(open_line(), cfg, 5.0, 2);
  ASSERT_FALSE(r.segments.empty());
  const auto &s = r.segments.front();
  EXPECT_EQ(s.planned_from.position, s.start.position);
  EXPECT_GT((s.planned_from.velocity - s.start.velocity).norm(), 1e-3);
  const auto again = rollout(open_line(), cfg, 5.0, 2);
  EXPECT_EQ(r.path, again.path);
  EXPECT_EQ(r.outcome, again.outcome);
}

TEST(Rollout, TightBudgetTimesOut) {
  auto cfg = blind_cfg();
  cfg.timeout_factor = 0.2;
  EXPECT_EQ(rollout(open_line(), cfg, 3.0, 0).outcome, Outcome::timeout);
}

TEST(Rollout, ExpertAvoidsTheWallThroughTheGap) {
  RunConfig cfg;
  cfg.expert.total_samples = 5000;
  const auto r = rollout(walled_line(), cfg, 3.0, 0);
  EXPECT_EQ(r.outcome, Outcome::success) << r.cause;
}

TEST(Rollout, ReplanPeriodMustBeMultipleOfSample) {
  auto cfg = blind_cfg();
  cfg.replan_period = 0.15;
  EXPECT_THROW(rollout(open_line(), cfg, 3.0, 0), InputError);
  cfg.replan_period = 0.2;
  EXPECT_EQ(rollout(open_line(), cfg, 3.0, 0).outcome, Outcome::success);
}

TEST(Sweep, DeterministicAndThreadInvariant) {
  auto cfg = blind_cfg();
  cfg.record_segments = false;
  cfg.speeds = {3.0, 7.0};
  cfg.n_seeds = 3;
  cfg.noise = NoiseModel{};
  const ScenarioFactory make = [](std::uint64_t s) {
    ForestSpec spec;
    spec.seed = s;
    return gen_forest(spec);
  };
  const auto a = sweep(make, cfg, "forest");
  cfg.threads = 3;
  const auto b = sweep(make, cfg, "forest");
  ASSERT_EQ(a.cells.size(), 6u);
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    EXPECT_EQ(a.cells[i].outcome, b.cells[i].outcome);
    EXPECT_EQ(a.cells[i].path, b.cells[i].path);
    EXPECT_EQ(a.cells[i].speed, i < 3 ? 3.0 : 7.0);
    EXPECT_EQ(a.cells[i].seed, i % 3);
  }
  ASSERT_EQ(a.aggregate.size(), 2u);
  EXPECT_EQ(a.aggregate[0].runs, 3u);
}

TEST(Sweep, FactoryErrorsPropagate) {
  auto cfg = blind_cfg();
  cfg.n_seeds = 1;
  cfg.speeds = {3.0};
  const ScenarioFactory bad = [](std::uint64_t) {
    Scenario sc;
    return sc;
  };
  EXPECT_THROW(sweep(bad, cfg), InputError);
}

TEST(Policy, ParseAndPrint) {
  EXPECT_EQ(parse_policy("blind"), Policy::blind);
  EXPECT_EQ(parse_policy("expert-local"), Policy::expert_local);
  EXPECT_STREQ(to_string(Policy::expert), "expert");
  EXPECT_STREQ(to_string(Outcome::infeasible), "infeasible");
  EXPECT_THROW(parse_policy("fast"), InputError);
}
