#include <gtest/gtest.h>

#include <random>

#include "mhplan/mh_chain.hpp"
#include "oracles.hpp"

using namespace mhplan;

namespace {

struct Draws {
  std::vector<double> samples;
  ChainStats stats;
};

Draws run_mixture_chain(std::size_t n, std::uint64_t seed, const VarianceSchedule &schedule = {}) {
  const oracle::Mixture1D mix;
  Draws out;
  out.samples.reserve(n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  out.stats = run_metropolis_hastings(
      0.0, n, [&](double x) { return mix.log_density(x); },
      [&](double x, std::size_t step, std::mt19937_64 &g) { return x + std::sqrt(schedule.variance_at(step)) * gauss(g); },
      [&](std::size_t, double, double, bool, double current) { out.samples.push_back(current); }, rng);
  return out;
}

}  // namespace

TEST(VarianceSchedule, StepsEverySwitch) {
  const VarianceSchedule s;
  EXPECT_EQ(s.variance_at(0), 2.0);
  EXPECT_EQ(s.variance_at(15999), 2.0);
  EXPECT_EQ(s.variance_at(16000), 5.0);
  EXPECT_EQ(s.variance_at(31999), 5.0);
  EXPECT_EQ(s.variance_at(32000), 10.0);
  EXPECT_EQ(s.variance_at(49999), 10.0);
  EXPECT_EQ(s.variance_at(1000000), 10.0);
}

TEST(VarianceSchedule, RejectsBadVariances) {
  VarianceSchedule s;
  s.variances = {};
  EXPECT_THROW(s.validate(), InputError);
  s.variances = {1.0, -1.0};
  EXPECT_THROW(s.validate(), InputError);
}

TEST(MetropolisHastings, BimodalMixtureTotalVariation) {
  const auto d = run_mixture_chain(50000, 7);
  ASSERT_EQ(d.samples.size(), 50000u);
  const double tv = oracle::total_variation(d.samples, oracle::Mixture1D{}, -6.0, 8.0, 50);
  EXPECT_LE(tv, 0.05);
  EXPECT_GT(d.stats.min_log_alpha, -std::numeric_limits<double>::infinity());
  EXPECT_EQ(d.stats.proposals, 50000u);
}

TEST(MetropolisHastings, VisitsBothModes) {
  const auto d = run_mixture_chain(50000, 11);
  const auto left = std::count_if(d.samples.begin(), d.samples.end(), [](double x) { return x < 0.25; });
  EXPECT_NEAR(static_cast<double>(left) / 50000.0, oracle::Mixture1D{}.cdf(0.25), 0.05);
}

TEST(MetropolisHastings, DeterministicForSeed) {
  const auto a = run_mixture_chain(2000, 3), b = run_mixture_chain(2000, 3);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(a.stats.accepted, b.stats.accepted);
}

TEST(MetropolisHastings, UphillAlwaysAccepted) {
  // Deterministic proposals that always improve the score are always taken.
  std::mt19937_64 rng(0);
  std::size_t visits = 0;
  const auto stats = run_metropolis_hastings(
      0, 100, [](int x) { return static_cast<double>(x); }, [](int x, std::size_t, std::mt19937_64 &) { return x + 1; },
      [&](std::size_t, int, double, bool accepted, int) { visits += accepted; }, rng);
  EXPECT_EQ(stats.accepted, 100u);
  EXPECT_EQ(visits, 100u);
  EXPECT_EQ(stats.acceptance_rate(), 1.0);
  EXPECT_EQ(stats.min_log_alpha, 0.0);
}

TEST(MetropolisHastings, TwoStateStationaryShare) {
  // Flip proposals between states with score ratio e^-1: the chain spends 1 / (1 + e) of its time at 1.
  std::mt19937_64 rng(5);
  const std::size_t n = 200000;
  std::size_t at_one = 0;
  const auto stats = run_metropolis_hastings(
      0, n, [](int x) { return x == 0 ? 0.0 : -1.0; }, [](int x, std::size_t, std::mt19937_64 &) { return 1 - x; },
      [&](std::size_t, int, double, bool, int current) { at_one += current; }, rng);
  EXPECT_NEAR(static_cast<double>(at_one) / n, 1.0 / (1.0 + std::exp(1.0)), 0.01);
  EXPECT_NEAR(stats.min_log_alpha, -1.0, 1e-15);
}
